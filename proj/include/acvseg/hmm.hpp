// Copyright 2026 The acvseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// acvseg/hmm.hpp
//
// HMM parameters: initial estimates from set-level ground truth and the
// per-video refined updates driven by pseudo-ground truth.

#ifndef ACVSEG_HMM_HPP
#define ACVSEG_HMM_HPP

#include "acvseg/core.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace acvseg {

struct HmmParams {
  Matrix transitions;  // K x K, row c holds p(c' | c)
  Vector lambdas;      // expected length per class, frames
  Vector priors;       // per-class footage fraction

  int num_classes() const { return static_cast<int>(lambdas.size()); }

  friend bool operator==(const HmmParams& a, const HmmParams& b) {
    return a.transitions == b.transitions && a.lambdas == b.lambdas && a.priors == b.priors;
  }
};

struct VideoSummary {
  int frames;
  ActionSet set;
};

struct TrainCorpusSummary {
  int num_classes = 0;
  std::vector<VideoSummary> videos;

  void check() const {
    if (videos.empty()) throw Error("corpus summary: no videos");
    for (const auto& v : videos) {
      if (v.frames < 1) throw Error("corpus summary: video with T < 1");
      v.set.check_within(num_classes);
    }
  }
};

struct TransitionEstimate {
  Matrix probs;
  std::vector<ClassId> empty_rows;  // classes without any co-occurring class
};

/// p(c'|c) from set co-occurrence: #(c, c') counts the sets holding both
/// c and c' (c' != c); each row is normalized over its pairs so that it is
/// stochastic. With sets of at most two classes this equals #(c, c') / #(c).
inline TransitionEstimate init_transitions(const std::vector<ActionSet>& sets, int num_classes) {
  if (sets.empty()) throw Error("init_transitions: empty corpus");
  Matrix pair = Matrix::Zero(num_classes, num_classes);
  Vector single = Vector::Zero(num_classes);
  for (const auto& s : sets) {
    s.check_within(num_classes);
    for (ClassId c : s) {
      single(c) += 1.0;
      for (ClassId d : s)
        if (d != c) pair(c, d) += 1.0;
    }
  }
  TransitionEstimate out{Matrix::Zero(num_classes, num_classes), {}};
  for (int c = 0; c < num_classes; ++c) {
    double pairs = pair.row(c).sum();
    if (single(c) == 0.0 || pairs == 0.0) {
      out.empty_rows.push_back(c);
      continue;
    }
    out.probs.row(c) = pair.row(c) / pairs;
  }
  return out;
}

struct LambdaEstimate {
  Vector lambdas;
  std::vector<ClassId> unseen;  // classes in no set; lambda = l_min
};

/// Objective sum_v (T_v - sum_{c in C_v} lambda_c)^2.
inline double lambda_objective(const TrainCorpusSummary& corpus, const Vector& lambdas) {
  double f = 0.0;
  for (const auto& v : corpus.videos) {
    double r = v.frames;
    for (ClassId c : v.set) r -= lambdas(c);
    f += r * r;
  }
  return f;
}

/// Least squares for per-class lengths with lambda_c >= l_min. Unconstrained
/// minimum-norm solve, clamp violators to the bound and re-solve over the
/// free classes; a clamped class is released again when the gradient says the
/// objective would decrease by moving it off the bound.
inline LambdaEstimate init_lambdas(const TrainCorpusSummary& corpus, double l_min) {
  corpus.check();
  if (!(l_min >= 1.0)) throw Error("init_lambdas: l_min must be >= 1");
  const int K = corpus.num_classes;
  const int V = static_cast<int>(corpus.videos.size());

  std::vector<int> seen;
  LambdaEstimate out{Vector::Constant(K, l_min), {}};
  {
    std::vector<bool> present(static_cast<std::size_t>(K), false);
    for (const auto& v : corpus.videos)
      for (ClassId c : v.set) present[static_cast<std::size_t>(c)] = true;
    for (int c = 0; c < K; ++c) (present[static_cast<std::size_t>(c)] ? seen.push_back(c) : out.unseen.push_back(c));
  }
  const int S = static_cast<int>(seen.size());
  Matrix A = Matrix::Zero(V, S);
  Vector b(V);
  for (int v = 0; v < V; ++v) {
    b(v) = corpus.videos[static_cast<std::size_t>(v)].frames;
    for (int j = 0; j < S; ++j)
      if (corpus.videos[static_cast<std::size_t>(v)].set.contains(seen[static_cast<std::size_t>(j)])) A(v, j) = 1.0;
  }

  std::vector<bool> clamped(static_cast<std::size_t>(S), false);
  Vector x = Vector::Constant(S, l_min);
  Vector best = x;
  double best_f = std::numeric_limits<double>::infinity();
  const double tol = 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff());

  for (int iter = 0; iter < 4 * S + 8; ++iter) {
    std::vector<int> free;
    for (int j = 0; j < S; ++j)
      if (!clamped[static_cast<std::size_t>(j)]) free.push_back(j);
    Vector rhs = b;
    for (int j = 0; j < S; ++j)
      if (clamped[static_cast<std::size_t>(j)]) rhs -= A.col(j) * l_min;
    x.setConstant(l_min);
    if (!free.empty()) {
      Matrix Af(V, static_cast<Eigen::Index>(free.size()));
      for (std::size_t k = 0; k < free.size(); ++k) Af.col(static_cast<Eigen::Index>(k)) = A.col(free[k]);
      Vector sol = Af.completeOrthogonalDecomposition().solve(rhs);
      for (std::size_t k = 0; k < free.size(); ++k) x(free[k]) = sol(static_cast<Eigen::Index>(k));
    }

    bool violated = false;
    for (int j : free) {
      if (x(j) < l_min - tol) {
        clamped[static_cast<std::size_t>(j)] = true;
        violated = true;
      }
    }
    if (violated) continue;

    double f = (b - A * x).squaredNorm();
    if (f < best_f) {
      best_f = f;
      best = x;
    }
    // KKT on the bound: d f / d x_j = -2 a_j^T r must be >= 0 for clamped j.
    Vector grad = -2.0 * A.transpose() * (b - A * x);
    int release = -1;
    double most = -tol;
    for (int j = 0; j < S; ++j) {
      if (clamped[static_cast<std::size_t>(j)] && grad(j) < most) {
        most = grad(j);
        release = j;
      }
    }
    if (release < 0) break;
    clamped[static_cast<std::size_t>(release)] = false;
  }

  for (int j = 0; j < S; ++j) out.lambdas(seen[static_cast<std::size_t>(j)]) = std::max(best(j), l_min);
  return out;
}

/// p(c) = sum_v T_v 1(c in C_v) / sum_v T_v.
inline Vector init_priors(const TrainCorpusSummary& corpus) {
  corpus.check();
  Vector p = Vector::Zero(corpus.num_classes);
  double total = 0.0;
  for (const auto& v : corpus.videos) {
    total += v.frames;
    for (ClassId c : v.set) p(c) += v.frames;
  }
  return p / total;
}

inline HmmParams init_hmm(const TrainCorpusSummary& corpus, double l_min) {
  std::vector<ActionSet> sets;
  sets.reserve(corpus.videos.size());
  for (const auto& v : corpus.videos) sets.push_back(v.set);
  return {init_transitions(sets, corpus.num_classes).probs, init_lambdas(corpus, l_min).lambdas,
          init_priors(corpus)};
}

/// log p(x_t | c) up to a per-frame constant: log p(c | x_t) - log p(c).
inline double log_frame_likelihood(double log_posterior, double prior) {
  if (!(prior > 0.0)) throw Error("log_frame_likelihood: class prior is zero; class unseen in training");
  return log_posterior - std::log(prior);
}

/// Rows follow `classes`; columns are frames. `log_posteriors` is K x T.
inline Matrix log_likelihood_table(const Matrix& log_posteriors, const Vector& priors,
                                   const std::vector<ClassId>& classes) {
  Matrix out(static_cast<Eigen::Index>(classes.size()), log_posteriors.cols());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    ClassId c = classes[i];
    if (!(priors(c) > 0.0))
      throw Error("log_frame_likelihood: class " + std::to_string(c) + " has zero prior; unseen in training");
    out.row(static_cast<Eigen::Index>(i)) = log_posteriors.row(c).array() - std::log(priors(c));
  }
  return out;
}

/// log of the Poisson pmf lambda^l e^-lambda / l!.
inline double log_poisson_length(int l, double lambda) {
  if (l <= 0) throw Error("log_poisson_length: length must be >= 1");
  if (!(lambda > 0.0)) throw Error("log_poisson_length: lambda must be > 0");
  return l * std::log(lambda) - lambda - std::lgamma(static_cast<double>(l) + 1.0);
}

/// Per-class table of log p(l | c) for l = 1..max_len, row-major [class][l-1].
class LengthTable {
 public:
  LengthTable(const Vector& lambdas, const std::vector<ClassId>& classes, int max_len)
      : max_len_(max_len), rows_(classes.size()) {
    std::vector<double> lgam(static_cast<std::size_t>(max_len));
    for (int l = 1; l <= max_len; ++l) lgam[static_cast<std::size_t>(l - 1)] = std::lgamma(l + 1.0);
    for (std::size_t i = 0; i < classes.size(); ++i) {
      double lam = lambdas(classes[i]);
      if (!(lam > 0.0)) throw Error("log_poisson_length: lambda must be > 0");
      double ll = std::log(lam);
      auto& row = rows_[i];
      row.resize(static_cast<std::size_t>(max_len));
      for (int l = 1; l <= max_len; ++l) row[static_cast<std::size_t>(l - 1)] = l * ll - lam - lgam[static_cast<std::size_t>(l - 1)];
    }
  }
  double operator()(std::size_t row, int l) const { return rows_[row][static_cast<std::size_t>(l - 1)]; }
  int max_len() const { return max_len_; }

 private:
  int max_len_;
  std::vector<std::vector<double>> rows_;
};

/// One refined update with rate 1/V from a video's pseudo-ground truth.
/// Transition rows move only for classes that have a successor segment in
/// `seg`; lambdas only for classes with a segment; priors for every class.
inline HmmParams update_refined(const HmmParams& params, const Segmentation& seg, int V) {
  if (V < 1) throw Error("update_refined: V must be >= 1");
  const int K = params.num_classes();
  const double rate = 1.0 / V;
  const double T = seg.total();
  HmmParams out = params;

  Matrix pairs = Matrix::Zero(K, K);
  Vector outgoing = Vector::Zero(K);
  Vector count = Vector::Zero(K);
  Vector frames = Vector::Zero(K);
  const auto& a = seg.actions();
  const auto& l = seg.lengths();
  for (int n = 0; n < seg.size(); ++n) {
    if (a[n] < 0 || a[n] >= K) throw Error("update_refined: label outside vocabulary");
    count(a[n]) += 1.0;
    frames(a[n]) += l[n];
    if (n + 1 < seg.size()) {
      pairs(a[n], a[n + 1]) += 1.0;
      outgoing(a[n]) += 1.0;
    }
  }
  for (int c = 0; c < K; ++c) {
    if (outgoing(c) > 0.0) {
      out.transitions.row(c) += rate * (pairs.row(c) / outgoing(c) - params.transitions.row(c));
    }
    if (count(c) > 0.0) {
      out.lambdas(c) = std::max(1.0, params.lambdas(c) + rate * (frames(c) / count(c) - params.lambdas(c)));
    }
    out.priors(c) = std::clamp(params.priors(c) + rate * (frames(c) / T - params.priors(c)), 0.0, 1.0);
  }
  return out;
}

}  // namespace acvseg

#endif  // ACVSEG_HMM_HPP
