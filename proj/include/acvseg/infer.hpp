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

// acvseg/infer.hpp
//
// Test-time inference: Monte-Carlo candidate action sequences, exact
// segmental alignment of each candidate, maximum-posterior selection.

#ifndef ACVSEG_INFER_HPP
#define ACVSEG_INFER_HPP

#include "acvseg/acv.hpp"
#include "acvseg/core.hpp"
#include "acvseg/data.hpp"
#include "acvseg/hmm.hpp"
#include "acvseg/parallel.hpp"
#include "acvseg/scorer.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <limits>
#include <random>
#include <vector>

namespace acvseg {

inline constexpr int kDefaultCandidates = 1000;
inline constexpr long kSampleAttemptCap = 1000000;

struct CandidateSequence {
  std::vector<ClassId> actions;
  ActionSet source;
};

/// Covers the source set, sum of lambdas exceeds T, and dropping the last
/// action brings the sum to <= T. No immediate repeats unless the set is a
/// singleton.
inline bool is_valid_candidate(const CandidateSequence& c, const Vector& lambdas, int T) {
  if (c.actions.empty()) return false;
  double sum = 0.0;
  for (std::size_t i = 0; i < c.actions.size(); ++i) {
    if (!c.source.contains(c.actions[i])) return false;
    if (i > 0 && c.source.size() > 1 && c.actions[i] == c.actions[i - 1]) return false;
    sum += lambdas(c.actions[i]);
  }
  if (!(sum > T) || !(sum - lambdas(c.actions.back()) <= T)) return false;
  for (ClassId a : c.source)
    if (std::find(c.actions.begin(), c.actions.end(), a) == c.actions.end()) return false;
  return true;
}

/// True when some draw can cover `set` before the lambda sum passes T, that
/// is when every class but the longest fits within T.
inline bool coverage_reachable(const ActionSet& set, const Vector& lambdas, int T) {
  double sum = 0.0, longest = 0.0;
  for (ClassId c : set) {
    sum += lambdas(c);
    longest = std::max(longest, lambdas(c));
  }
  return sum - longest <= T;
}

/// Draws one valid candidate, resampling until the set is covered.
template <class Rng>
CandidateSequence sample_sequence(const ActionSet& set, const Vector& lambdas, int T, Rng& rng) {
  const int M = set.size();
  for (ClassId c : set)
    if (!(lambdas(c) > 0.0)) throw Error("sample_sequences: lambda must be > 0");
  if (!coverage_reachable(set, lambdas, T))
    throw Error("sample_sequences: no sequence can cover the set within " + std::to_string(T) + " frames");
  std::vector<bool> seen(static_cast<std::size_t>(M));
  for (long attempts = 1;; ++attempts) {
    if (attempts > kSampleAttemptCap) throw Error("sample_sequences: no covering sequence after 1e6 attempts");
    CandidateSequence c{{}, set};
    std::fill(seen.begin(), seen.end(), false);
    double sum = 0.0;
    int last = -1;
    while (sum <= T) {
      int r;
      if (M == 1) {
        r = 0;
      } else if (last < 0) {
        r = std::uniform_int_distribution<int>(0, M - 1)(rng);
      } else {
        r = std::uniform_int_distribution<int>(0, M - 2)(rng);
        if (r >= last) ++r;
      }
      c.actions.push_back(set[r]);
      seen[static_cast<std::size_t>(r)] = true;
      sum += lambdas(set[r]);
      last = r;
    }
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return c;
  }
}

template <class Rng>
std::vector<CandidateSequence> sample_sequences(const ActionSet& set, const Vector& lambdas, int T, int K, Rng& rng) {
  if (K < 1) throw Error("sample_sequences: K must be >= 1");
  std::vector<CandidateSequence> out;
  out.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) out.push_back(sample_sequence(set, lambdas, T, rng));
  return out;
}

inline std::vector<CandidateSequence> sample_sequences(const ActionSet& set, const Vector& lambdas, int T, int K,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_sequences(set, lambdas, T, K, rng);
}

/// log p(c|x_t) - log p(c) for every vocabulary class (K x T). Classes with a
/// zero prior get -inf rows and are rejected when an alignment uses them.
inline Matrix vocabulary_log_likelihoods(const FrameScores& s, const Vector& priors) {
  Matrix out(s.num_classes(), s.frames());
  for (int c = 0; c < s.num_classes(); ++c) {
    if (priors(c) > 0.0)
      out.row(c) = s.log_softmax.row(c).array() - std::log(priors(c));
    else
      out.row(c).setConstant(-std::numeric_limits<double>::infinity());
  }
  return out;
}

struct AlignResult {
  Segmentation segmentation;
  double log_posterior = -std::numeric_limits<double>::infinity();
};

/// Exact segmental DP for a fixed label order over one video. Per-class
/// prefix sums and length tables are built once and shared by every
/// candidate.
class VideoAligner {
 public:
  /// `loglik` is K x T with rows indexed by class id.
  VideoAligner(Matrix loglik, const HmmParams& hmm)
      : loglik_(std::move(loglik)), hmm_(hmm), T_(static_cast<int>(loglik_.cols())) {
    if (T_ < 1) throw Error("align_sequence: empty video");
    if (loglik_.rows() != hmm.num_classes()) throw Error("align_sequence: likelihood rows do not match the vocabulary");
    prefix_ = detail::prefix_rows(loglik_);
    std::vector<ClassId> all(static_cast<std::size_t>(hmm.num_classes()));
    std::iota(all.begin(), all.end(), 0);
    lengths_.emplace(hmm.lambdas.cwiseMax(std::numeric_limits<double>::min()), all, T_);
  }

  int frames() const { return T_; }

  AlignResult align(const std::vector<ClassId>& seq) const {
    const int N = static_cast<int>(seq.size());
    if (N < 1) throw Error("align_sequence: empty action sequence");
    if (T_ < N) throw Error("align_sequence: video has fewer frames than segments");
    for (ClassId c : seq) {
      if (c < 0 || c >= hmm_.num_classes()) throw Error("align_sequence: label outside vocabulary");
      if (!std::isfinite(prefix_[static_cast<std::size_t>(c)].back()))
        throw Error("align_sequence: class " + std::to_string(c) + " has no finite likelihood (zero prior)");
      if (!(hmm_.lambdas(c) > 0.0)) throw Error("align_sequence: lambda must be > 0");
    }
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    auto seg = [&](int n, int b, int e) {
      const auto c = static_cast<std::size_t>(seq[static_cast<std::size_t>(n)]);
      return prefix_[c][static_cast<std::size_t>(e)] - prefix_[c][static_cast<std::size_t>(b)] + (*lengths_)(c, e - b);
    };
    // value[n][t]: segments 0..n cover frames [0, t). Segment n ends at t
    // with n+1 <= t <= T-(N-1-n).
    std::vector<std::vector<double>> value(static_cast<std::size_t>(N), std::vector<double>(static_cast<std::size_t>(T_ + 1), kNegInf));
    std::vector<std::vector<int>> back(static_cast<std::size_t>(N), std::vector<int>(static_cast<std::size_t>(T_ + 1), -1));
    for (int t = 1; t <= T_ - (N - 1); ++t) value[0][static_cast<std::size_t>(t)] = seg(0, 0, t);
    for (int n = 1; n < N; ++n) {
      const auto& pv = value[static_cast<std::size_t>(n - 1)];
      auto& v = value[static_cast<std::size_t>(n)];
      auto& bk = back[static_cast<std::size_t>(n)];
      const int tmax = T_ - (N - 1 - n);
      for (int t = n + 1; t <= tmax; ++t) {
        double best = kNegInf;
        int arg = -1;
        for (int tp = n; tp < t; ++tp) {
          double s = pv[static_cast<std::size_t>(tp)] + seg(n, tp, t);
          if (s > best) {
            best = s;
            arg = tp;
          }
        }
        v[static_cast<std::size_t>(t)] = best;
        bk[static_cast<std::size_t>(t)] = arg;
      }
    }
    std::vector<int> ends(static_cast<std::size_t>(N));
    ends[static_cast<std::size_t>(N - 1)] = T_;
    for (int n = N - 1; n > 0; --n)
      ends[static_cast<std::size_t>(n - 1)] = back[static_cast<std::size_t>(n)][static_cast<std::size_t>(ends[static_cast<std::size_t>(n)])];
    std::vector<int> lens(static_cast<std::size_t>(N));
    int prev = 0;
    for (int n = 0; n < N; ++n) {
      lens[static_cast<std::size_t>(n)] = ends[static_cast<std::size_t>(n)] - prev;
      prev = ends[static_cast<std::size_t>(n)];
    }
    AlignResult r;
    r.segmentation = Segmentation(seq, lens);
    r.log_posterior = value[static_cast<std::size_t>(N - 1)][static_cast<std::size_t>(T_)] + transition_log_score(seq, hmm_);
    return r;
  }

 private:
  Matrix loglik_;
  HmmParams hmm_;
  int T_;
  std::vector<std::vector<double>> prefix_;
  std::optional<LengthTable> lengths_;
};

inline AlignResult align_sequence(const std::vector<ClassId>& seq, const Matrix& loglik, const HmmParams& hmm) {
  return VideoAligner(loglik, hmm).align(seq);
}

struct InferenceResult {
  AlignResult best;
  int best_candidate = -1;
  std::vector<CandidateSequence> candidates;
  std::vector<double> posteriors;
};

namespace detail {

// Immediate repeats (only drawn for singleton sets) collapse into one segment.
inline std::vector<ClassId> merge_repeats(const std::vector<ClassId>& seq) {
  std::vector<ClassId> out;
  for (ClassId c : seq)
    if (out.empty() || out.back() != c) out.push_back(c);
  return out;
}

// Aligns every candidate; the first strict maximum wins. Repeated draws of
// the same sequence reuse the earlier alignment.
inline InferenceResult select_best(const VideoAligner& aligner, std::vector<CandidateSequence> cands) {
  InferenceResult out;
  out.posteriors.reserve(cands.size());
  std::map<std::vector<ClassId>, AlignResult> memo;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    std::vector<ClassId> key = merge_repeats(cands[k].actions);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, aligner.align(key)).first;
    AlignResult r = it->second;
    out.posteriors.push_back(r.log_posterior);
    if (out.best_candidate < 0 || r.log_posterior > out.best.log_posterior) {
      out.best = std::move(r);
      out.best_candidate = static_cast<int>(k);
    }
  }
  out.candidates = std::move(cands);
  return out;
}

}  // namespace detail

struct InferenceConfig {
  int candidates = kDefaultCandidates;
  std::uint64_t seed = 0;
};

/// Segmentation without set supervision: each candidate first draws one
/// training set uniformly among those whose coverage is reachable in T
/// frames, then a valid sequence from it.
inline InferenceResult segment_video(const FrameScores& scores, const std::vector<ActionSet>& training_sets,
                                     const HmmParams& hmm, const InferenceConfig& cfg) {
  if (training_sets.empty()) throw Error("segment_video: no training sets");
  if (cfg.candidates < 1) throw Error("segment_video: K must be >= 1");
  std::vector<const ActionSet*> pool;
  for (const auto& s : training_sets)
    if (coverage_reachable(s, hmm.lambdas, scores.frames())) pool.push_back(&s);
  if (pool.empty())
    throw Error("segment_video: no training set can be covered in " + std::to_string(scores.frames()) + " frames");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<CandidateSequence> cands;
  for (int k = 0; k < cfg.candidates; ++k)
    cands.push_back(sample_sequence(*pool[pick(rng)], hmm.lambdas, scores.frames(), rng));
  VideoAligner aligner(vocabulary_log_likelihoods(scores, hmm.priors), hmm);
  return detail::select_best(aligner, std::move(cands));
}

/// Alignment: candidates are drawn from the video's own ground-truth set.
inline InferenceResult align_video(const FrameScores& scores, const ActionSet& truth, const HmmParams& hmm,
                                   const InferenceConfig& cfg) {
  if (cfg.candidates < 1) throw Error("align_video: K must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  auto cands = sample_sequences(truth, hmm.lambdas, scores.frames(), cfg.candidates, rng);
  VideoAligner aligner(vocabulary_log_likelihoods(scores, hmm.priors), hmm);
  return detail::select_best(aligner, std::move(cands));
}

enum class InferenceMode { kSegment, kAlign };

/// Infers every video of `corpus` in parallel. Video v draws its candidates
/// from mix_seed(seed, v), so results do not depend on the thread count.
inline std::vector<Segmentation> infer_corpus(const Corpus& corpus, const MlpParams& mlp, const HmmParams& hmm,
                                              const std::vector<ActionSet>& training_sets, InferenceMode mode,
                                              int candidates, std::uint64_t seed, int threads = worker_threads()) {
  std::vector<Segmentation> out(corpus.videos.size());
  parallel_for(
      corpus.videos.size(),
      [&](std::size_t v) {
        const Video& video = corpus.videos[v];
        FrameScores s = forward(mlp, video.features);
        InferenceConfig cfg{candidates, mix_seed(seed, v)};
        out[v] = (mode == InferenceMode::kAlign ? align_video(s, video.set, hmm, cfg)
                                                : segment_video(s, training_sets, hmm, cfg))
                     .best.segmentation;
      },
      threads);
  return out;
}

}  // namespace acvseg

#endif  // ACVSEG_INFER_HPP
