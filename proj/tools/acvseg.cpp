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

// Command-line front end: synth, pretrain, train, segment, align, eval and
// oracle-check.

#include "acvseg/acvseg.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace acvseg;

namespace {

struct SynthArgs {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
};

struct PretrainArgs {
  std::string manifest, out;
  int epochs = 5;
  double lr = 0.01;
  int hidden = kDefaultHidden;
  double l_min = 50.0;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string manifest, init, out;
  long iters = 100000;
  double lr = 0.01;
  long lr_drop_at = 10000;
  double lr_after = 0.001;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  int tau = kDefaultTau;
  std::optional<double> l_min;
  std::uint64_t seed = 0;
  std::string prune = "off";
  long log_every = 1000;
};

struct InferArgs {
  std::string manifest, ckpt, out;
  int k = kDefaultCandidates;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string pred, gt, metric = "all", format = "table";
};

struct OracleArgs {
  int tmax = 30, cmax = 3, trials = 200;
  std::uint64_t seed = 0;
};

void run_synth(const SynthArgs& a) {
  SynthSpec spec = read_synth_spec(a.spec);
  if (a.seed) spec.seed = *a.seed;
  SynthCorpus corpus = synth_generate(spec);
  write_synth_corpus(a.out, corpus);
  std::cout << "wrote " << corpus.videos.size() << " videos to " << a.out << '\n';
}

void run_pretrain(const PretrainArgs& a) {
  Corpus corpus = load_corpus(a.manifest);
  std::mt19937_64 init(stream_seed(a.seed, Stream::kInit));
  MlpParams mlp = MlpParams::random(corpus.videos.front().features.dim(), corpus.vocabulary.size(), a.hidden, init);
  std::vector<MilVideo> bags;
  for (const auto& v : corpus.videos) bags.push_back({&v.features, v.set});
  mlp = mil_pretrain(std::move(mlp), bags, a.epochs, a.lr, stream_seed(a.seed, Stream::kPretrain));
  TrainState state = initial_state(corpus, mlp, a.l_min);
  write_checkpoint(a.out, make_checkpoint(state, corpus));
  std::cout << "pretrained " << a.epochs << " epochs on " << corpus.videos.size() << " videos\n";
}

void check_vocabulary(const Checkpoint& ck, const Corpus& corpus) {
  if (!(ck.vocabulary == corpus.vocabulary)) throw Error("checkpoint vocabulary differs from the manifest vocabulary");
  if (ck.mlp.W1.cols() != corpus.videos.front().features.dim())
    throw Error("checkpoint feature dimension " + std::to_string(ck.mlp.W1.cols()) + " differs from the corpus (" +
                std::to_string(corpus.videos.front().features.dim()) + ")");
}

void run_train(const TrainArgs& a) {
  Corpus corpus = load_corpus(a.manifest);
  Checkpoint ck = read_checkpoint(a.init);
  check_vocabulary(ck, corpus);
  TrainState state = state_from_checkpoint(ck);
  if (a.l_min) state.hmm = init_hmm(corpus.summary(), *a.l_min);
  TrainConfig cfg;
  cfg.iterations = state.iteration + a.iters;
  cfg.lr = {a.lr, a.lr_drop_at, a.lr_after};
  cfg.acv = {a.alpha, a.tau, a.prune == "on"};
  cfg.beta = a.beta;
  cfg.seed = a.seed;
  cfg.log_every = a.log_every;
  train(state, corpus, cfg, [](const ProgressReport& p) {
    std::cout << "iter " << p.iteration << " ce " << io::format_double(p.mean_ce) << " div "
              << io::format_double(p.mean_div);
    if (p.anchor_iod) std::cout << " anchor_iod " << io::format_double(*p.anchor_iod);
    std::cout << std::endl;
  });
  write_checkpoint(a.out, make_checkpoint(state, corpus));
}

void run_infer(const InferArgs& a, InferenceMode mode) {
  Corpus corpus = load_corpus(a.manifest);
  Checkpoint ck = read_checkpoint(a.ckpt);
  check_vocabulary(ck, corpus);
  if (a.k < 1) throw Error("--k must be >= 1");
  auto segs = infer_corpus(corpus, ck.mlp, ck.hmm, ck.training_sets, mode, a.k, stream_seed(a.seed, Stream::kInfer));
  fs::create_directories(a.out);
  for (std::size_t v = 0; v < segs.size(); ++v)
    write_labels(fs::path(a.out) / (corpus.videos[v].id + ".txt"), expand_segmentation(segs[v]), corpus.vocabulary);
  std::cout << "wrote " << segs.size() << " predictions to " << a.out << '\n';
}

void run_eval(const EvalArgs& a) {
  CorpusManifest gt = read_manifest(a.gt);
  MetricTotals totals;
  for (const auto& r : gt.videos) {
    if (!r.labels) throw Error(a.gt + ": video '" + r.id + "' has no frame labels");
    FrameLabeling truth = read_labels(*r.labels, gt.vocabulary, -1);
    FrameLabeling pred = read_labels(fs::path(a.pred) / (r.id + ".txt"), gt.vocabulary, static_cast<int>(truth.size()));
    totals.add(pred, truth);
  }
  std::vector<std::pair<std::string, Ratio>> rows;
  if (a.metric == "mof" || a.metric == "all") rows.emplace_back("mof", totals.mof);
  if (a.metric == "iod" || a.metric == "all") rows.emplace_back("iod", totals.iod);
  if (a.metric == "midpoint" || a.metric == "all") rows.emplace_back("midpoint", totals.midpoint);
  if (a.format == "csv") {
    std::cout << "metric,value,hits,total\n";
    for (const auto& [name, r] : rows)
      std::cout << name << ',' << io::format_double(r.value()) << ',' << io::format_double(r.hits) << ','
                << io::format_double(r.total) << '\n';
    return;
  }
  std::cout << std::left << std::setw(10) << "metric" << std::right << std::setw(10) << "value" << std::setw(12)
            << "hits" << std::setw(10) << "total" << '\n';
  for (const auto& [name, r] : rows)
    std::cout << std::left << std::setw(10) << name << std::right << std::fixed << std::setprecision(4)
              << std::setw(10) << r.value() << std::setprecision(2) << std::setw(12) << r.hits << std::setprecision(0)
              << std::setw(10) << r.total << '\n';
}

int run_oracle_check(const OracleArgs& a) {
  OracleCheckReport rep = oracle_check(a.tmax, a.cmax, a.trials, a.seed);
  std::cout << rep.exact << '/' << rep.trials << " exact\nmax score gap " << io::format_double(rep.max_gap) << '\n';
  std::cout << (rep.exact == rep.trials ? "PASS" : "FAIL") << '\n';
  return rep.exact == rep.trials ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-supervised temporal action segmentation"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--spec", sa.spec, "Spec file of 'key = value' lines")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--seed", sa.seed, "Overrides the spec seed");

  PretrainArgs pa;
  auto* pretrain = app.add_subcommand("pretrain", "MIL pretraining of the frame scorer");
  pretrain->add_option("--manifest", pa.manifest)->required()->check(CLI::ExistingFile);
  pretrain->add_option("--out", pa.out, "Checkpoint to write")->required();
  pretrain->add_option("--epochs", pa.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
  pretrain->add_option("--lr", pa.lr)->capture_default_str()->check(CLI::PositiveNumber);
  pretrain->add_option("--hidden", pa.hidden, "Hidden units")->capture_default_str()->check(CLI::PositiveNumber);
  pretrain->add_option("--lmin", pa.l_min, "Minimum expected length for the initial HMM")->capture_default_str()->check(CLI::PositiveNumber);
  pretrain->add_option("--seed", pa.seed)->capture_default_str();

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "ACV training");
  trainc->add_option("--manifest", ta.manifest)->required()->check(CLI::ExistingFile);
  trainc->add_option("--init", ta.init, "Starting checkpoint")->required()->check(CLI::ExistingFile);
  trainc->add_option("--out", ta.out, "Checkpoint to write")->required();
  trainc->add_option("--iters", ta.iters, "Further iterations to run")->capture_default_str()->check(CLI::NonNegativeNumber);
  trainc->add_option("--lr", ta.lr)->capture_default_str()->check(CLI::PositiveNumber);
  trainc->add_option("--lr-drop-at", ta.lr_drop_at)->capture_default_str()->check(CLI::NonNegativeNumber);
  trainc->add_option("--lr-after", ta.lr_after)->capture_default_str()->check(CLI::PositiveNumber);
  trainc->add_option("--alpha", ta.alpha)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  trainc->add_option("--beta", ta.beta)->capture_default_str()->check(CLI::NonNegativeNumber);
  trainc->add_option("--tau", ta.tau)->capture_default_str()->check(CLI::NonNegativeNumber);
  trainc->add_option("--lmin", ta.l_min, "Re-initialize the HMM with this minimum length");
  trainc->add_option("--seed", ta.seed)->capture_default_str();
  trainc->add_option("--prune", ta.prune)->capture_default_str()->check(CLI::IsMember({"on", "off"}));
  trainc->add_option("--log-every", ta.log_every)->capture_default_str()->check(CLI::NonNegativeNumber);

  InferArgs sega, alia;
  for (auto [name, args, help] : {std::tuple{"segment", &sega, "Segment videos without their action sets"},
                                  std::tuple{"align", &alia, "Align videos to their action sets"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--manifest", args->manifest)->required()->check(CLI::ExistingFile);
    sub->add_option("--ckpt", args->ckpt)->required()->check(CLI::ExistingFile);
    sub->add_option("--k", args->k, "Candidate sequences per video")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", args->seed)->capture_default_str();
    sub->add_option("--out", args->out, "Directory for per-video label files")->required();
  }

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Score predictions against frame labels");
  evalc->add_option("--pred", ea.pred, "Prediction directory")->required()->check(CLI::ExistingDirectory);
  evalc->add_option("--gt", ea.gt, "Manifest with frame labels")->required()->check(CLI::ExistingFile);
  evalc->add_option("--metric", ea.metric)->capture_default_str()->check(CLI::IsMember({"mof", "iod", "midpoint", "all"}));
  evalc->add_option("--format", ea.format)->capture_default_str()->check(CLI::IsMember({"table", "csv"}));

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle-check", "Constrained Viterbi against exhaustive search");
  oracle->add_option("--tmax", oa.tmax)->capture_default_str()->check(CLI::PositiveNumber);
  oracle->add_option("--cmax", oa.cmax)->capture_default_str()->check(CLI::PositiveNumber);
  oracle->add_option("--trials", oa.trials)->capture_default_str()->check(CLI::NonNegativeNumber);
  oracle->add_option("--seed", oa.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) run_synth(sa);
    if (pretrain->parsed()) run_pretrain(pa);
    if (trainc->parsed()) run_train(ta);
    if (app.got_subcommand("segment")) run_infer(sega, InferenceMode::kSegment);
    if (app.got_subcommand("align")) run_infer(alia, InferenceMode::kAlign);
    if (evalc->parsed()) run_eval(ea);
    if (oracle->parsed()) return run_oracle_check(oa);
  } catch (const std::exception& e) {
    std::cerr << "acvseg: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
