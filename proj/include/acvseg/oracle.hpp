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

// acvseg/oracle.hpp
//
// Exhaustive references for the segmental dynamic programs. Slow on purpose;
// never used on the training path.

#ifndef ACVSEG_ORACLE_HPP
#define ACVSEG_ORACLE_HPP

#include "acvseg/acv.hpp"
#include "acvseg/core.hpp"
#include "acvseg/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace acvseg {

/// A video reduced to what the HMM objective needs. `loglik` rows follow the
/// sorted ids of `set`.
struct ScoredInstance {
  int frames = 0;
  ActionSet set;
  Matrix loglik;
  HmmParams hmm;
};

/// sum_n log p(c_{n+1}|c_n) + sum_n log p(l_n|c_n) + sum_t log p(x_t|c_{n(t)}),
/// evaluated frame by frame.
inline double segmentation_log_score(const Segmentation& seg, const ScoredInstance& inst) {
  if (seg.total() != inst.frames) throw Error("segmentation_log_score: lengths do not sum to T");
  double score = transition_log_score(seg.actions(), inst.hmm);
  int t = 0;
  for (int n = 0; n < seg.size(); ++n) {
    const ClassId c = seg.actions()[static_cast<std::size_t>(n)];
    const int row = inst.set.index_of(c);
    if (row < 0) throw Error("segmentation_log_score: label outside the instance set");
    const int l = seg.lengths()[static_cast<std::size_t>(n)];
    score += log_poisson_length(l, inst.hmm.lambdas(c));
    for (int k = 0; k < l; ++k, ++t) score += inst.loglik(row, t);
  }
  return score;
}

struct OracleResult {
  Segmentation segmentation;
  double score = -std::numeric_limits<double>::infinity();
  long long candidates = 0;
};

inline constexpr double kAnchorOracleCap = 1e7;

/// Scores every legal cut placement of `graph`. Enumeration runs with the last
/// cut as the most significant digit, ascending, keeping the first strict
/// maximum; that matches the Viterbi tie rule.
inline OracleResult brute_force_anchor_best(const AnchorGraph& graph, const ScoredInstance& inst) {
  if (graph.paths() > kAnchorOracleCap) throw Error("brute_force_anchor_best: more than 1e7 cut combinations");
  if (graph.frames != inst.frames) throw Error("brute_force_anchor_best: graph and instance lengths differ");
  const int M = graph.segments();
  std::vector<ClassId> actions;
  for (const auto& a : graph.anchors) actions.push_back(a.action);
  std::vector<int> cuts(graph.cut_lo);
  OracleResult best;
  for (;;) {
    std::vector<int> lens;
    int prev = 0;
    for (int c : cuts) {
      lens.push_back(c - prev);
      prev = c;
    }
    lens.push_back(inst.frames - prev);
    Segmentation seg(actions, lens);
    double s = segmentation_log_score(seg, inst);
    ++best.candidates;
    if (best.candidates == 1 || s > best.score) {
      best.score = s;
      best.segmentation = seg;
    }
    // odometer, cut 0 fastest
    int n = 0;
    for (; n < M - 1; ++n) {
      if (cuts[static_cast<std::size_t>(n)] < graph.cut_hi[static_cast<std::size_t>(n)]) {
        ++cuts[static_cast<std::size_t>(n)];
        break;
      }
      cuts[static_cast<std::size_t>(n)] = graph.cut_lo[static_cast<std::size_t>(n)];
    }
    if (n == M - 1) break;
  }
  return best;
}

/// True optimum of the HMM objective over every segmentation with at most
/// `max_segments` segments, labels drawn from the set, covering the set.
inline OracleResult brute_force_all_color(const ScoredInstance& inst, int max_segments) {
  const int T = inst.frames;
  const int M = inst.set.size();
  if (T > 20 || M > 3 || max_segments > 5) throw Error("brute_force_all_color: instance exceeds T<=20, |C|<=3, N<=5");
  if (max_segments < 1) throw Error("brute_force_all_color: max_segments must be >= 1");
  OracleResult best;
  bool found = false;

  for (int N = 1; N <= std::min(max_segments, T); ++N) {
    // compositions of T into N positive parts, via N-1 increasing cuts
    std::vector<int> cuts(static_cast<std::size_t>(N - 1));
    for (int i = 0; i < N - 1; ++i) cuts[static_cast<std::size_t>(i)] = i + 1;
    for (;;) {
      std::vector<int> lens;
      int prev = 0;
      for (int c : cuts) {
        lens.push_back(c - prev);
        prev = c;
      }
      lens.push_back(T - prev);
      // label odometer over set rows
      std::vector<int> rows(static_cast<std::size_t>(N), 0);
      for (;;) {
        int covered = 0;
        for (int r = 0; r < M; ++r)
          if (std::find(rows.begin(), rows.end(), r) != rows.end()) ++covered;
        if (covered == M) {
          std::vector<ClassId> labels;
          for (int r : rows) labels.push_back(inst.set[r]);
          Segmentation seg(labels, lens);
          double s = segmentation_log_score(seg, inst);
          ++best.candidates;
          if (!found || s > best.score) {
            found = true;
            best.score = s;
            best.segmentation = seg;
          }
        }
        int k = 0;
        for (; k < N; ++k) {
          if (++rows[static_cast<std::size_t>(k)] < M) break;
          rows[static_cast<std::size_t>(k)] = 0;
        }
        if (k == N) break;
      }
      // next composition
      int i = N - 2;
      while (i >= 0 && cuts[static_cast<std::size_t>(i)] == T - (N - 1 - i)) --i;
      if (i < 0) break;
      ++cuts[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < N - 1; ++j) cuts[static_cast<std::size_t>(j)] = cuts[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  if (!found) throw Error("brute_force_all_color: no segmentation covers the set within max_segments");
  return best;
}

struct OracleCheckReport {
  int trials = 0;
  int exact = 0;
  double max_gap = 0.0;
};

/// Random instance with T in [min(tmax, max(2, cmax)), tmax], a set of 1..cmax classes from a
/// vocabulary of cmax + 2, uniform log-likelihoods in [-3, 0], positive
/// transitions without self-loops, lambdas in [2, max(3, T/1.5)], and random
/// disjoint anchors.
template <class Rng>
std::pair<ScoredInstance, AnchorGraph> random_check_instance(int tmax, int cmax, Rng& rng) {
  const int K = cmax + 2;
  const int T = std::uniform_int_distribution<int>(std::min(tmax, std::max(2, cmax)), tmax)(rng);
  std::vector<ClassId> all(static_cast<std::size_t>(K));
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  const int M = std::uniform_int_distribution<int>(1, std::min(cmax, T))(rng);
  ScoredInstance inst;
  inst.frames = T;
  inst.set = ActionSet(std::vector<ClassId>(all.begin(), all.begin() + M));
  std::uniform_real_distribution<double> ll(-3.0, 0.0), tr(0.05, 1.0);
  std::uniform_real_distribution<double> lam(2.0, std::max(3.0, T / 1.5));
  inst.loglik = Matrix(M, T);
  for (Eigen::Index i = 0; i < inst.loglik.size(); ++i) inst.loglik.data()[i] = ll(rng);
  inst.hmm = HmmParams{Matrix::Zero(K, K), Vector(K), Vector::Constant(K, 1.0 / K)};
  for (int c = 0; c < K; ++c) {
    for (int d = 0; d < K; ++d)
      if (d != c) inst.hmm.transitions(c, d) = tr(rng);
    inst.hmm.transitions.row(c) /= inst.hmm.transitions.row(c).sum();
    inst.hmm.lambdas(c) = lam(rng);
  }
  // 2M distinct frames paired into ordered intervals; single frames when T < 2M
  std::vector<int> frames(static_cast<std::size_t>(T));
  std::iota(frames.begin(), frames.end(), 0);
  std::shuffle(frames.begin(), frames.end(), rng);
  const bool pairs = T >= 2 * M;
  std::vector<int> pts(frames.begin(), frames.begin() + (pairs ? 2 * M : M));
  std::sort(pts.begin(), pts.end());
  std::vector<ClassId> order(inst.set.ids());
  std::shuffle(order.begin(), order.end(), rng);
  AnchorSet anchors;
  for (int i = 0; i < M; ++i) {
    const int b = pts[static_cast<std::size_t>(pairs ? 2 * i : i)];
    const int e = pts[static_cast<std::size_t>(pairs ? 2 * i + 1 : i)];
    anchors.anchors.push_back({order[static_cast<std::size_t>(i)], (b + e) / 2, b, e});
  }
  AnchorGraph graph = build_graph(anchors, T);
  return {std::move(inst), std::move(graph)};
}

/// Compares constrained_viterbi with brute_force_anchor_best on random
/// instances. A trial is exact when labels and lengths agree and the scores
/// differ by at most 1e-9.
inline OracleCheckReport oracle_check(int tmax, int cmax, int trials, std::uint64_t seed) {
  if (tmax < 1 || cmax < 1 || trials < 0) throw Error("oracle-check: tmax, cmax must be >= 1 and trials >= 0");
  std::mt19937_64 rng(seed);
  OracleCheckReport rep;
  for (int i = 0; i < trials; ++i) {
    auto [inst, graph] = random_check_instance(tmax, cmax, rng);
    ViterbiResult dp = constrained_viterbi(graph, inst.set, inst.loglik, inst.hmm);
    OracleResult bf = brute_force_anchor_best(graph, inst);
    const double gap = std::abs(dp.score - bf.score);
    rep.max_gap = std::max(rep.max_gap, gap);
    ++rep.trials;
    if (dp.segmentation == bf.segmentation && gap <= 1e-9) ++rep.exact;
  }
  return rep;
}

}  // namespace acvseg

#endif  // ACVSEG_ORACLE_HPP
