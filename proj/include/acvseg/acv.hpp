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

// acvseg/acv.hpp
//
// Anchor-constrained Viterbi: per-action saliency, salient anchor intervals,
// the anchor-constrained segmentation graph and the exact Viterbi over it.

#ifndef ACVSEG_ACV_HPP
#define ACVSEG_ACV_HPP

#include "acvseg/core.hpp"
#include "acvseg/hmm.hpp"
#include "acvseg/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

namespace acvseg {

inline constexpr int kDefaultTau = 15;
inline constexpr double kDefaultAlpha = 0.6;
inline constexpr double kPruneFactor = 1.5;

namespace detail {

// Windowed sums over [t - tau, t + tau] truncated to [0, T), row by row.
inline Matrix window_sum(const Matrix& m, int tau) {
  const Eigen::Index T = m.cols();
  Matrix out(m.rows(), T);
  std::vector<double> prefix(static_cast<std::size_t>(T + 1));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    prefix[0] = 0.0;
    for (Eigen::Index t = 0; t < T; ++t)
      prefix[static_cast<std::size_t>(t + 1)] = prefix[static_cast<std::size_t>(t)] + m(i, t);
    for (Eigen::Index t = 0; t < T; ++t) {
      Eigen::Index lo = std::max<Eigen::Index>(0, t - tau);
      Eigen::Index hi = std::min<Eigen::Index>(T, t + tau + 1);
      out(i, t) = prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)];
    }
  }
  return out;
}

// Row of the minimum log f within the set at frame t; lowest row on ties.
inline int min_row(const FrameScores& s, const ActionSet& set, int t) {
  int best = 0;
  for (int i = 1; i < set.size(); ++i)
    if (s.log_sigmoid(set[i], t) < s.log_sigmoid(set[best], t)) best = i;
  return best;
}

}  // namespace detail

/// Saliency S[c,t] = sum_{u=-tau..tau} [log f_c(x_{t+u}) - min_{c' in C} log f_c'(x_{t+u})]
/// with the window truncated at the video borders. Rows follow the sorted ids
/// of `set`; every entry is >= 0.
inline Matrix compute_saliency(const FrameScores& s, const ActionSet& set, int tau = kDefaultTau) {
  if (tau < 0) throw Error("compute_saliency: tau must be >= 0");
  set.check_within(s.num_classes());
  const int M = set.size(), T = s.frames();
  Matrix margin(M, T);
  for (int t = 0; t < T; ++t) {
    const double lo = s.log_sigmoid(set[detail::min_row(s, set, t)], t);
    for (int i = 0; i < M; ++i) margin(i, t) = s.log_sigmoid(set[i], t) - lo;
  }
  return detail::window_sum(margin, tau);
}

/// Back-propagates dL/dS (M x T) to dL/dlogits (K x T).
inline Matrix saliency_backward(const FrameScores& s, const ActionSet& set, int tau, const Matrix& dS) {
  const int M = set.size(), T = s.frames();
  // The window is symmetric, so the adjoint of the windowed sum is the same sum.
  Matrix g = detail::window_sum(dS, tau);
  Matrix dlogits = Matrix::Zero(s.num_classes(), T);
  for (int t = 0; t < T; ++t) {
    const int lo = detail::min_row(s, set, t);
    // The minimum row's own margin is identically zero, so its term is
    // skipped rather than added and cancelled.
    double total = 0.0;
    for (int i = 0; i < M; ++i) {
      if (i == lo) continue;
      dlogits(set[i], t) += g(i, t);
      total += g(i, t);
    }
    dlogits(set[lo], t) -= total;
    for (int i = 0; i < M; ++i) dlogits(set[i], t) *= 1.0 - s.sigmoid(set[i], t);  // d log sigma(z) / dz
  }
  return dlogits;
}

/// Inclusive frame interval [begin, end] around a salient center.
struct Anchor {
  ClassId action;
  int center;
  int begin;
  int end;

  int length() const { return end - begin + 1; }
  bool overlaps(const Anchor& o) const { return begin <= o.end && o.begin <= end; }
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

/// One anchor per action of the set, sorted by center, pairwise disjoint.
struct AnchorSet {
  std::vector<Anchor> anchors;
  double alpha = kDefaultAlpha;  // fraction actually used after any fallback
};

namespace detail {

inline Anchor make_anchor(ClassId c, int center, int half, int T) {
  return {c, center, std::max(0, center - half), std::min(T - 1, center + half)};
}

// Returns false when some action has no frame left that avoids the others.
inline bool place_anchors(const Matrix& S, const ActionSet& set, const std::vector<int>& half,
                          std::vector<Anchor>& out) {
  const int M = set.size();
  const int T = static_cast<int>(S.cols());
  std::vector<std::vector<int>> ranked(static_cast<std::size_t>(M));
  out.clear();
  for (int i = 0; i < M; ++i) {
    auto& r = ranked[static_cast<std::size_t>(i)];
    r.resize(static_cast<std::size_t>(T));
    std::iota(r.begin(), r.end(), 0);
    std::stable_sort(r.begin(), r.end(), [&](int a, int b) { return S(i, a) > S(i, b); });
    out.push_back(make_anchor(set[i], r.front(), half[static_cast<std::size_t>(i)], T));
  }
  // Each reassignment removes every overlap of the moved anchor, so the
  // number of overlapping pairs strictly decreases.
  for (;;) {
    int loser = -1;
    for (int i = 0; i < M && loser < 0; ++i) {
      for (int j = i + 1; j < M; ++j) {
        const auto& a = out[static_cast<std::size_t>(i)];
        const auto& b = out[static_cast<std::size_t>(j)];
        if (!a.overlaps(b)) continue;
        loser = S(j, b.center) > S(i, a.center) ? i : j;
        break;
      }
    }
    if (loser < 0) return true;
    bool moved = false;
    for (int t : ranked[static_cast<std::size_t>(loser)]) {
      Anchor cand = make_anchor(set[loser], t, half[static_cast<std::size_t>(loser)], T);
      bool clear = true;
      for (int k = 0; k < M && clear; ++k)
        if (k != loser && cand.overlaps(out[static_cast<std::size_t>(k)])) clear = false;
      if (clear) {
        out[static_cast<std::size_t>(loser)] = cand;
        moved = true;
        break;
      }
    }
    if (!moved) return false;
  }
}

}  // namespace detail

/// Picks each action's most salient frame (earliest on ties) as the center
/// of an interval of half-width floor(alpha * lambda_c / 2). Of two
/// overlapping anchors the one with lower center saliency moves to its best
/// frame clear of all others. If no disjoint placement exists alpha is halved
/// and the placement retried.
inline AnchorSet select_anchors(const Matrix& S, const ActionSet& set, const Vector& lambdas,
                                double alpha = kDefaultAlpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("select_anchors: alpha must be in (0, 1]");
  if (S.rows() != set.size()) throw Error("select_anchors: saliency rows do not match the action set");
  if (S.cols() < 1) throw Error("select_anchors: empty video");
  const int M = set.size();
  for (;;) {
    std::vector<int> half(static_cast<std::size_t>(M));
    bool all_single = true;
    for (int i = 0; i < M; ++i) {
      half[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(alpha * lambdas(set[i]) / 2.0));
      all_single = all_single && half[static_cast<std::size_t>(i)] == 0;
    }
    AnchorSet result;
    result.alpha = alpha;
    if (detail::place_anchors(S, set, half, result.anchors)) {
      std::sort(result.anchors.begin(), result.anchors.end(),
                [](const Anchor& a, const Anchor& b) { return a.center < b.center; });
      return result;
    }
    if (all_single)
      throw Error("select_anchors: video of " + std::to_string(S.cols()) + " frames cannot hold " +
                  std::to_string(M) + " disjoint anchors");
    alpha /= 2.0;
  }
}

/// Segmentation graph over cut positions. Segment n carries the action of
/// anchor n and must contain it entirely; cut n (the first frame of segment
/// n+1) ranges over [cut_lo[n], cut_hi[n]].
struct AnchorGraph {
  int frames = 0;
  std::vector<Anchor> anchors;
  std::vector<int> cut_lo;
  std::vector<int> cut_hi;

  int segments() const { return static_cast<int>(anchors.size()); }

  /// Number of distinct paths.
  double paths() const {
    double n = 1.0;
    for (std::size_t i = 0; i < cut_lo.size(); ++i) n *= cut_hi[i] - cut_lo[i] + 1;
    return n;
  }
};

inline AnchorGraph build_graph(const AnchorSet& anchors, int T) {
  if (anchors.anchors.empty()) throw Error("build_graph: no anchors");
  AnchorGraph g;
  g.frames = T;
  g.anchors = anchors.anchors;
  std::sort(g.anchors.begin(), g.anchors.end(), [](const Anchor& a, const Anchor& b) { return a.center < b.center; });
  for (std::size_t n = 0; n < g.anchors.size(); ++n) {
    const auto& a = g.anchors[n];
    if (a.begin < 0 || a.end >= T || a.begin > a.center || a.center > a.end)
      throw Error("build_graph: anchor interval outside the video");
    if (n + 1 < g.anchors.size()) {
      const auto& b = g.anchors[n + 1];
      if (a.end >= b.begin) throw Error("build_graph: overlapping anchors");
      g.cut_lo.push_back(a.end + 1);
      g.cut_hi.push_back(b.begin);
    }
  }
  return g;
}

struct ViterbiOptions {
  bool prune = false;
};

struct ViterbiResult {
  Segmentation segmentation;
  double score = 0.0;
  bool prune_fallback = false;  // pruning removed every path; result is unpruned
};

/// Sum of log p(c_{n+1} | c_n) along a label sequence.
inline double transition_log_score(const std::vector<ClassId>& actions, const HmmParams& hmm) {
  double s = 0.0;
  for (std::size_t n = 0; n + 1 < actions.size(); ++n) s += safe_log(hmm.transitions(actions[n], actions[n + 1]));
  return s;
}

namespace detail {

// Per-row prefix sums of a likelihood table: out[r][t] = sum_{k<t} ll(r, k).
inline std::vector<std::vector<double>> prefix_rows(const Matrix& ll) {
  std::vector<std::vector<double>> p(static_cast<std::size_t>(ll.rows()));
  for (Eigen::Index r = 0; r < ll.rows(); ++r) {
    auto& row = p[static_cast<std::size_t>(r)];
    row.resize(static_cast<std::size_t>(ll.cols() + 1));
    row[0] = 0.0;
    for (Eigen::Index t = 0; t < ll.cols(); ++t)
      row[static_cast<std::size_t>(t + 1)] = row[static_cast<std::size_t>(t)] + ll(r, t);
  }
  return p;
}

inline void check_table(const Matrix& ll, int rows, int T, const char* who) {
  if (ll.rows() != rows || ll.cols() != T || T < 1)
    throw Error(std::string(who) + ": likelihood table does not cover every class and frame");
  if (!ll.allFinite()) throw Error(std::string(who) + ": non-finite likelihood");
}

}  // namespace detail

/// Exact maximizer of the HMM log-score over the paths of `graph`.
/// `loglik` rows follow the sorted ids of `set`. Ties go to earlier cuts,
/// the last cut deciding first.
inline ViterbiResult constrained_viterbi(const AnchorGraph& graph, const ActionSet& set, const Matrix& loglik,
                                         const HmmParams& hmm, ViterbiOptions opt = {}) {
  const int T = graph.frames;
  const int M = graph.segments();
  detail::check_table(loglik, set.size(), T, "constrained_viterbi");
  std::vector<ClassId> actions;
  std::vector<std::size_t> rows;
  for (const auto& a : graph.anchors) {
    int r = set.index_of(a.action);
    if (r < 0) throw Error("constrained_viterbi: anchor action not in the set");
    actions.push_back(a.action);
    rows.push_back(static_cast<std::size_t>(r));
  }
  const auto prefix = detail::prefix_rows(loglik);
  const LengthTable lengths(hmm.lambdas, actions, T);
  auto seg_score = [&](int n, int b, int e) {
    const auto& p = prefix[rows[static_cast<std::size_t>(n)]];
    return p[static_cast<std::size_t>(e)] - p[static_cast<std::size_t>(b)] + lengths(static_cast<std::size_t>(n), e - b);
  };
  const double transitions = transition_log_score(actions, hmm);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  auto solve = [&](bool prune) -> std::pair<std::vector<int>, double> {
    double lambda_sum_total = 0.0;
    for (ClassId c : actions) lambda_sum_total += hmm.lambdas(c);
    if (prune && lambda_sum_total >= kPruneFactor * T) return {{}, kNegInf};
    if (M == 1) return {{}, seg_score(0, 0, T)};

    // value[n][b - cut_lo[n]]: best score of segments 0..n with cut n at b.
    std::vector<std::vector<double>> value(static_cast<std::size_t>(M - 1));
    std::vector<std::vector<int>> back(static_cast<std::size_t>(M - 1));
    double lambda_sum = 0.0;
    for (int n = 0; n + 1 < M; ++n) {
      lambda_sum += hmm.lambdas(actions[static_cast<std::size_t>(n)]);
      const int lo = graph.cut_lo[static_cast<std::size_t>(n)], hi = graph.cut_hi[static_cast<std::size_t>(n)];
      auto& v = value[static_cast<std::size_t>(n)];
      auto& bk = back[static_cast<std::size_t>(n)];
      v.assign(static_cast<std::size_t>(hi - lo + 1), kNegInf);
      bk.assign(static_cast<std::size_t>(hi - lo + 1), -1);
      for (int b = lo; b <= hi; ++b) {
        if (prune && lambda_sum > kPruneFactor * b) continue;
        double best = kNegInf;
        int arg = -1;
        if (n == 0) {
          best = seg_score(0, 0, b);
          arg = 0;
        } else {
          const int plo = graph.cut_lo[static_cast<std::size_t>(n - 1)], phi = graph.cut_hi[static_cast<std::size_t>(n - 1)];
          const auto& pv = value[static_cast<std::size_t>(n - 1)];
          for (int bp = plo; bp <= phi; ++bp) {
            double prev = pv[static_cast<std::size_t>(bp - plo)];
            if (prev == kNegInf) continue;
            double s = prev + seg_score(n, bp, b);
            if (s > best) {
              best = s;
              arg = bp;
            }
          }
        }
        v[static_cast<std::size_t>(b - lo)] = best;
        bk[static_cast<std::size_t>(b - lo)] = arg;
      }
    }
    const int last = M - 2;
    const int plo = graph.cut_lo[static_cast<std::size_t>(last)], phi = graph.cut_hi[static_cast<std::size_t>(last)];
    double best = kNegInf;
    int arg = -1;
    for (int bp = plo; bp <= phi; ++bp) {
      double prev = value[static_cast<std::size_t>(last)][static_cast<std::size_t>(bp - plo)];
      if (prev == kNegInf) continue;
      double s = prev + seg_score(M - 1, bp, T);
      if (s > best) {
        best = s;
        arg = bp;
      }
    }
    if (arg < 0) return {{}, kNegInf};
    std::vector<int> cuts(static_cast<std::size_t>(M - 1));
    cuts[static_cast<std::size_t>(last)] = arg;
    for (int n = last; n > 0; --n) {
      int lo = graph.cut_lo[static_cast<std::size_t>(n)];
      cuts[static_cast<std::size_t>(n - 1)] = back[static_cast<std::size_t>(n)][static_cast<std::size_t>(cuts[static_cast<std::size_t>(n)] - lo)];
    }
    return {cuts, best};
  };

  ViterbiResult out;
  auto [cuts, best] = solve(opt.prune);
  if (opt.prune && best == kNegInf) {
    std::tie(cuts, best) = solve(false);
    out.prune_fallback = true;
  }
  std::vector<int> lens;
  int prev = 0;
  for (int c : cuts) {
    lens.push_back(c - prev);
    prev = c;
  }
  lens.push_back(T - prev);
  out.segmentation = Segmentation(actions, lens);
  out.score = best + transitions;
  return out;
}

struct AcvConfig {
  double alpha = kDefaultAlpha;
  int tau = kDefaultTau;
  bool prune = false;
};

struct AcvResult {
  Matrix saliency;  // |C| x T
  AnchorSet anchors;
  AnchorGraph graph;
  ViterbiResult viterbi;
};

/// Pseudo-ground truth of one training video from its frame scores.
inline AcvResult run_acv(const FrameScores& scores, const ActionSet& set, const HmmParams& hmm,
                         const AcvConfig& cfg = {}) {
  AcvResult r;
  r.saliency = compute_saliency(scores, set, cfg.tau);
  r.anchors = select_anchors(r.saliency, set, hmm.lambdas, cfg.alpha);
  r.graph = build_graph(r.anchors, scores.frames());
  Matrix ll = log_likelihood_table(scores.log_softmax, hmm.priors, set.ids());
  r.viterbi = constrained_viterbi(r.graph, set, ll, hmm, {cfg.prune});
  return r;
}

/// Debug dump: one line per anchor, then the chosen cuts.
inline void write_acv_debug(std::ostream& os, const AcvResult& r, const Vocabulary& vocab) {
  for (const auto& a : r.anchors.anchors)
    os << "anchor " << vocab.name(a.action) << ' ' << a.center << ' ' << a.begin << ' ' << a.end << '\n';
  os << "cuts";
  int t = 0;
  const auto& lens = r.viterbi.segmentation.lengths();
  for (std::size_t n = 0; n + 1 < lens.size(); ++n) {
    t += lens[n];
    os << ' ' << t;
  }
  os << "\nscore " << r.viterbi.score << '\n';
}

}  // namespace acvseg

#endif  // ACVSEG_ACV_HPP
