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

// acvseg/scorer.hpp
//
// Two-layer frame scorer: h = ReLU(W1 x + b1), logits z = W2 h + b2.
// Per-class binary scores are sigmoid(z); class posteriors are the softmax
// of the same logits over the vocabulary. Gradients are written by hand.

#ifndef ACVSEG_SCORER_HPP
#define ACVSEG_SCORER_HPP

#include "acvseg/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace acvseg {

inline constexpr int kDefaultHidden = 256;
inline constexpr double kProbEps = 1e-12;

struct MlpParams {
  Matrix W1;  // H x D
  Vector b1;  // H
  Matrix W2;  // K x H
  Vector b2;  // K

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int hidden() const { return static_cast<int>(W1.rows()); }
  int num_classes() const { return static_cast<int>(W2.rows()); }

  static MlpParams zeros(int D, int K, int H = kDefaultHidden) {
    return {Matrix::Zero(H, D), Vector::Zero(H), Matrix::Zero(K, H), Vector::Zero(K)};
  }

  /// He-style Gaussian initialization, zero biases.
  template <class Rng>
  static MlpParams random(int D, int K, int H, Rng& rng) {
    MlpParams p = zeros(D, K, H);
    std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / D));
    std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / H));
    for (Eigen::Index i = 0; i < p.W1.size(); ++i) p.W1.data()[i] = n1(rng);
    for (Eigen::Index i = 0; i < p.W2.size(); ++i) p.W2.data()[i] = n2(rng);
    return p;
  }

  void check_shapes() const {
    if (b1.size() != W1.rows() || W2.cols() != W1.rows() || b2.size() != W2.rows())
      throw Error("mlp: inconsistent parameter shapes");
  }

  bool all_finite() const { return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite(); }

  MlpParams& operator+=(const MlpParams& o) {
    W1 += o.W1;
    b1 += o.b1;
    W2 += o.W2;
    b2 += o.b2;
    return *this;
  }
  MlpParams& operator*=(double s) {
    W1 *= s;
    b1 *= s;
    W2 *= s;
    b2 *= s;
    return *this;
  }

  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    return a.W1 == b.W1 && a.b1 == b.b1 && a.W2 == b.W2 && a.b2 == b.b2;
  }
};

/// Forward pass output; columns are frames.
struct FrameScores {
  Matrix hidden;       // H x T, post-ReLU
  Matrix logits;       // K x T
  Matrix sigmoid;      // K x T, f_c(x_t)
  Matrix log_sigmoid;  // K x T
  Matrix softmax;      // K x T, p(c | x_t)
  Matrix log_softmax;  // K x T

  int frames() const { return static_cast<int>(logits.cols()); }
  int num_classes() const { return static_cast<int>(logits.rows()); }
};

inline double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

/// Fills the derived score matrices from `logits`.
inline void finish_scores(FrameScores& s) {
  const Eigen::Index K = s.logits.rows(), T = s.logits.cols();
  s.sigmoid.resize(K, T);
  s.log_sigmoid.resize(K, T);
  s.softmax.resize(K, T);
  s.log_softmax.resize(K, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double mx = s.logits.col(t).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < K; ++c) sum += std::exp(s.logits(c, t) - mx);
    double lse = mx + std::log(sum);
    for (Eigen::Index c = 0; c < K; ++c) {
      double z = s.logits(c, t);
      s.sigmoid(c, t) = sigmoid(z);
      s.log_sigmoid(c, t) = log_sigmoid(z);
      s.log_softmax(c, t) = z - lse;
      s.softmax(c, t) = std::exp(z - lse);
    }
  }
}

inline FrameScores forward(const MlpParams& p, const FrameFeatures& x) {
  p.check_shapes();
  if (x.dim() != p.input_dim())
    throw Error("forward: feature dimension " + std::to_string(x.dim()) + " does not match scorer input " +
                std::to_string(p.input_dim()));
  FrameScores s;
  s.hidden.noalias() = p.W1 * x.values().transpose();
  s.hidden.colwise() += p.b1;
  s.hidden = s.hidden.cwiseMax(0.0);
  s.logits.noalias() = p.W2 * s.hidden;
  s.logits.colwise() += p.b2;
  finish_scores(s);
  return s;
}

/// Gradient of a scalar loss w.r.t. every parameter, given dL/dlogits.
inline MlpParams backward(const MlpParams& p, const FrameFeatures& x, const FrameScores& s, const Matrix& grad_logits) {
  MlpParams g;
  g.W2.noalias() = grad_logits * s.hidden.transpose();
  g.b2 = grad_logits.rowwise().sum();
  Matrix dh = p.W2.transpose() * grad_logits;
  dh = (s.hidden.array() > 0.0).select(dh, 0.0);
  g.W1.noalias() = dh * x.values();
  g.b1 = dh.rowwise().sum();
  return g;
}

struct LossGrad {
  double value = 0.0;
  Matrix grad;
};

/// Binary cross-entropy over all classes on the softmax posteriors against a
/// frame labeling, averaged over frames. Gradient is w.r.t. the logits.
inline LossGrad cross_entropy_loss(const FrameScores& s, const FrameLabeling& labels) {
  const int K = s.num_classes(), T = s.frames();
  if (static_cast<int>(labels.size()) != T)
    throw Error("cross_entropy_loss: labeling has " + std::to_string(labels.size()) + " frames, scores have " +
                std::to_string(T));
  LossGrad out{0.0, Matrix::Zero(K, T)};
  Vector dp(K);
  for (int t = 0; t < T; ++t) {
    const int y = labels[static_cast<std::size_t>(t)];
    if (y < 0 || y >= K) throw Error("cross_entropy_loss: label outside vocabulary");
    for (int c = 0; c < K; ++c) {
      double p = s.softmax(c, t);
      double pc = std::clamp(p, kProbEps, 1.0 - kProbEps);
      bool inside = p == pc;
      if (c == y) {
        out.value -= std::log(pc);
        dp(c) = inside ? -1.0 / pc : 0.0;
      } else {
        out.value -= std::log(1.0 - pc);
        dp(c) = inside ? 1.0 / (1.0 - pc) : 0.0;
      }
    }
    // Softmax Jacobian: dz_j = p_j (dp_j - sum_c dp_c p_c).
    double inner = dp.dot(s.softmax.col(t));
    for (int c = 0; c < K; ++c) out.grad(c, t) = s.softmax(c, t) * (dp(c) - inner);
  }
  out.value /= T;
  out.grad /= T;
  return out;
}

/// Mean cosine similarity over ordered pairs of distinct rows of a
/// non-negative saliency matrix. Gradient is w.r.t. the saliency entries.
inline LossGrad diversity_loss(const Matrix& S) {
  const Eigen::Index M = S.rows();
  LossGrad out{0.0, Matrix::Zero(M, S.cols())};
  if (M < 2) return out;
  Vector norm(M);
  std::vector<bool> floored(static_cast<std::size_t>(M));
  for (Eigen::Index i = 0; i < M; ++i) {
    double n = S.row(i).norm();
    floored[static_cast<std::size_t>(i)] = n < kProbEps;
    norm(i) = std::max(n, kProbEps);
  }
  const double scale = 2.0 / (static_cast<double>(M) * static_cast<double>(M - 1));
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = i + 1; j < M; ++j) {
      double dot = S.row(i).dot(S.row(j));
      double cos = dot / (norm(i) * norm(j));
      out.value += scale * cos;
      out.grad.row(i) += scale * S.row(j) / (norm(i) * norm(j));
      out.grad.row(j) += scale * S.row(i) / (norm(i) * norm(j));
      if (!floored[static_cast<std::size_t>(i)]) out.grad.row(i) -= scale * cos * S.row(i) / (norm(i) * norm(i));
      if (!floored[static_cast<std::size_t>(j)]) out.grad.row(j) -= scale * cos * S.row(j) / (norm(j) * norm(j));
    }
  }
  return out;
}

inline constexpr double kDefaultBeta = 0.4;

inline double total_loss(double ce, double div, double beta = kDefaultBeta) {
  if (!(beta >= 0.0)) throw Error("total_loss: beta must be >= 0");
  return ce + beta * div;
}

struct LearningRateSchedule {
  double initial = 0.01;
  long drop_at = 10000;
  double after = 0.001;

  double at(long iteration) const { return iteration < drop_at ? initial : after; }
};

/// params - lr * grads. Rejects non-finite gradients.
inline MlpParams sgd_step(const MlpParams& params, const MlpParams& grads, double lr) {
  if (!(lr > 0.0)) throw Error("sgd_step: learning rate must be > 0");
  auto check = [](const auto& m, const char* name) {
    if (!m.allFinite()) {
      Eigen::Index bad = 0;
      while (bad < m.size() && std::isfinite(m.data()[bad])) ++bad;
      throw Error(std::string("sgd_step: non-finite gradient in ") + name + " at flat index " + std::to_string(bad));
    }
  };
  check(grads.W1, "W1");
  check(grads.b1, "b1");
  check(grads.W2, "W2");
  check(grads.b2, "b2");
  MlpParams out = params;
  out.W1 -= lr * grads.W1;
  out.b1 -= lr * grads.b1;
  out.W2 -= lr * grads.W2;
  out.b2 -= lr * grads.b2;
  return out;
}

/// Max-pooled multi-instance loss of one video: for each class, binary
/// cross-entropy of max_t f_c(x_t) against 1(c in set), averaged over classes.
/// The gradient flows to the witness frame of every class.
inline LossGrad mil_loss(const FrameScores& s, const ActionSet& set) {
  const int K = s.num_classes();
  set.check_within(K);
  LossGrad out{0.0, Matrix::Zero(K, s.frames())};
  for (int c = 0; c < K; ++c) {
    Eigen::Index witness = 0;
    double z = s.logits.row(c).maxCoeff(&witness);
    double y = set.contains(c) ? 1.0 : 0.0;
    // -[y log sigma(z) + (1-y) log(1 - sigma(z))]
    out.value += -(y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z));
    out.grad(c, witness) = sigmoid(z) - y;
  }
  out.value /= K;
  out.grad /= K;
  return out;
}

struct MilVideo {
  const FrameFeatures* features;
  ActionSet set;
};

/// SGD over shuffled videos for `epochs` passes of the max-pooled MIL loss.
inline MlpParams mil_pretrain(MlpParams params, const std::vector<MilVideo>& corpus, int epochs, double lr,
                              std::uint64_t seed) {
  if (corpus.empty()) throw Error("mil_pretrain: empty corpus");
  if (epochs < 0) throw Error("mil_pretrain: epochs must be >= 0");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto& v = corpus[i];
      FrameScores s = forward(params, *v.features);
      LossGrad lg = mil_loss(s, v.set);
      params = sgd_step(params, backward(params, *v.features, s, lg.grad), lr);
    }
  }
  return params;
}

}  // namespace acvseg

#endif  // ACVSEG_SCORER_HPP
