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

// acvseg/train.hpp
//
// Set-supervised training loop: pick one video per iteration, generate its
// pseudo-ground truth with ACV, apply the refined HMM update, then one SGD
// step on cross-entropy + beta * diversity.

#ifndef ACVSEG_TRAIN_HPP
#define ACVSEG_TRAIN_HPP

#include "acvseg/acv.hpp"
#include "acvseg/core.hpp"
#include "acvseg/data.hpp"
#include "acvseg/eval.hpp"
#include "acvseg/hmm.hpp"
#include "acvseg/scorer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace acvseg {

struct TrainConfig {
  long iterations = 100000;
  LearningRateSchedule lr;
  AcvConfig acv;
  double beta = kDefaultBeta;
  double l_min = 50.0;
  std::uint64_t seed = 0;
  bool refine_hmm = true;
  long log_every = 1000;
};

struct LossBreakdown {
  double total = 0.0;
  double ce = 0.0;
  double div = 0.0;
  MlpParams grads;
};

/// Loss and parameter gradients of one video for a fixed pseudo-labeling.
inline LossBreakdown training_loss(const MlpParams& params, const FrameFeatures& x, const ActionSet& set,
                                   const FrameLabeling& pseudo, double beta, int tau) {
  FrameScores s = forward(params, x);
  LossGrad ce = cross_entropy_loss(s, pseudo);
  Matrix S = compute_saliency(s, set, tau);
  LossGrad div = diversity_loss(S);
  Matrix grad = ce.grad;
  if (beta != 0.0) grad += beta * saliency_backward(s, set, tau, div.grad);
  return {total_loss(ce.value, div.value, beta), ce.value, div.value, backward(params, x, s, grad)};
}

struct TrainState {
  HmmParams hmm;
  MlpParams mlp;
  long iteration = 0;
};

struct StepReport {
  std::size_t video = 0;
  double ce = 0.0;
  double div = 0.0;
  AcvResult acv;
};

struct ProgressReport {
  long iteration = 0;
  double mean_ce = 0.0;
  double mean_div = 0.0;
  std::optional<double> anchor_iod;
};

/// Video picked at a given iteration; depends only on (seed, iteration) so a
/// resumed run replays the same schedule.
inline std::size_t video_for_iteration(std::uint64_t seed, long iteration, std::size_t videos) {
  std::mt19937_64 rng(mix_seed(stream_seed(seed, Stream::kTrain), static_cast<std::uint64_t>(iteration)));
  return std::uniform_int_distribution<std::size_t>(0, videos - 1)(rng);
}

inline StepReport train_step(TrainState& state, const Corpus& corpus, const TrainConfig& cfg) {
  const std::size_t V = corpus.videos.size();
  StepReport rep;
  rep.video = video_for_iteration(cfg.seed, state.iteration, V);
  const Video& v = corpus.videos[rep.video];
  FrameScores s = forward(state.mlp, v.features);
  rep.acv = run_acv(s, v.set, state.hmm, cfg.acv);
  if (cfg.refine_hmm) state.hmm = update_refined(state.hmm, rep.acv.viterbi.segmentation, static_cast<int>(V));

  LossGrad ce = cross_entropy_loss(s, expand_segmentation(rep.acv.viterbi.segmentation));
  LossGrad div = diversity_loss(rep.acv.saliency);
  Matrix grad = ce.grad;
  if (cfg.beta != 0.0) grad += cfg.beta * saliency_backward(s, v.set, cfg.acv.tau, div.grad);
  state.mlp = sgd_step(state.mlp, backward(state.mlp, v.features, s, grad), cfg.lr.at(state.iteration));
  rep.ce = ce.value;
  rep.div = div.value;
  ++state.iteration;
  return rep;
}

/// Pooled IoD of the current anchors against frame labels, over the videos
/// that carry labels. Evaluation only.
inline std::optional<double> anchor_iod_probe(const TrainState& state, const Corpus& corpus, const AcvConfig& acv) {
  Ratio r;
  bool any = false;
  for (const auto& v : corpus.videos) {
    if (!v.labels) continue;
    any = true;
    FrameScores s = forward(state.mlp, v.features);
    Matrix S = compute_saliency(s, v.set, acv.tau);
    r += anchor_iod_counts(select_anchors(S, v.set, state.hmm.lambdas, acv.alpha), to_segments(*v.labels));
  }
  if (!any) return std::nullopt;
  return r.value();
}

inline TrainState initial_state(const Corpus& corpus, const MlpParams& mlp, double l_min) {
  return {init_hmm(corpus.summary(), l_min), mlp, 0};
}

/// Runs until `state.iteration` reaches cfg.iterations.
inline void train(TrainState& state, const Corpus& corpus, const TrainConfig& cfg,
                  const std::function<void(const ProgressReport&)>& progress = {}) {
  if (corpus.videos.empty()) throw Error("train: empty corpus");
  double ce_sum = 0.0, div_sum = 0.0;
  long window = 0;
  while (state.iteration < cfg.iterations) {
    StepReport r = train_step(state, corpus, cfg);
    ce_sum += r.ce;
    div_sum += r.div;
    ++window;
    if (progress && cfg.log_every > 0 && state.iteration % cfg.log_every == 0) {
      progress({state.iteration, ce_sum / window, div_sum / window, anchor_iod_probe(state, corpus, cfg.acv)});
      ce_sum = div_sum = 0.0;
      window = 0;
    }
  }
}

inline Checkpoint make_checkpoint(const TrainState& state, const Corpus& corpus) {
  return {corpus.vocabulary, state.hmm, state.mlp, corpus.sets(), state.iteration};
}

inline TrainState state_from_checkpoint(const Checkpoint& ck) { return {ck.hmm, ck.mlp, ck.iteration}; }

}  // namespace acvseg

#endif  // ACVSEG_TRAIN_HPP
