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

// acvseg/data.hpp
//
// Plain-text file formats (features, manifests, frame labels, checkpoints)
// and the seeded synthetic corpus generator.
//
//   features:   "T D" header, then T rows of D space-separated reals
//   manifest:   "#vocabulary<TAB>name name ..." then one video per line:
//               id<TAB>features-path<TAB>set names[<TAB>labels-path]
//               (relative paths resolve against the manifest's directory)
//   labels:     one action name per line, one line per frame
//   checkpoint: "[HMM]", "[MLP]", "[SETS]" and "[TRAIN]" sections; each
//               tensor is a "name dims..." line followed by row-major values

#ifndef ACVSEG_DATA_HPP
#define ACVSEG_DATA_HPP

#include "acvseg/core.hpp"
#include "acvseg/hmm.hpp"
#include "acvseg/scorer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace acvseg {

namespace fs = std::filesystem;

namespace io {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw Error(where + ": invalid number '" + std::string(s) + "'");
  return v;
}

inline long parse_int(std::string_view s, const std::string& where) {
  long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw Error(where + ": invalid integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

/// Space-separated tokens; empty tokens are skipped.
inline std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  for (auto t : split(s, ' '))
    if (!t.empty()) out.push_back(t);
  return out;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

// Line reader that tracks line numbers for diagnostics.
class Lines {
 public:
  Lines(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::string where() const { return name_ + ":" + std::to_string(line_no_); }
  const std::string& name() const { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  int line_no_ = 0;
};

}  // namespace io

// ---------------------------------------------------------------- features

inline FrameFeatures parse_features(std::istream& in, const std::string& name) {
  io::Lines lines(in, name);
  std::string line;
  if (!lines.next(line)) throw Error(name + ": missing 'T D' header");
  auto head = io::tokens(line);
  if (head.size() != 2) throw Error(lines.where() + ": header must be 'T D'");
  const long T = io::parse_int(head[0], lines.where());
  const long D = io::parse_int(head[1], lines.where());
  if (T < 1 || D < 1) throw Error(lines.where() + ": T and D must be >= 1");
  Matrix values(T, D);
  for (long t = 0; t < T; ++t) {
    if (!lines.next(line))
      throw Error(name + ": expected " + std::to_string(T) + " rows, found " + std::to_string(t));
    auto row = io::tokens(line);
    if (static_cast<long>(row.size()) != D)
      throw Error(lines.where() + ": expected " + std::to_string(D) + " values, found " + std::to_string(row.size()));
    for (long d = 0; d < D; ++d) values(t, d) = io::parse_double(row[static_cast<std::size_t>(d)], lines.where());
  }
  while (lines.next(line))
    if (!io::tokens(line).empty()) throw Error(lines.where() + ": unexpected data after " + std::to_string(T) + " rows");
  return FrameFeatures(std::move(values));
}

inline FrameFeatures read_features(const fs::path& path) {
  auto in = io::open_in(path);
  return parse_features(in, path.string());
}

inline void write_features(std::ostream& os, const FrameFeatures& x) {
  os << x.frames() << ' ' << x.dim() << '\n';
  for (int t = 0; t < x.frames(); ++t) {
    for (int d = 0; d < x.dim(); ++d) {
      if (d) os << ' ';
      os << io::format_double(x.values()(t, d));
    }
    os << '\n';
  }
}

inline void write_features(const fs::path& path, const FrameFeatures& x) {
  auto out = io::open_out(path);
  write_features(out, x);
}

// ------------------------------------------------------------------ labels

inline FrameLabeling read_labels(const fs::path& path, const Vocabulary& vocab, int expected_frames) {
  auto in = io::open_in(path);
  io::Lines lines(in, path.string());
  FrameLabeling out;
  std::string line;
  while (lines.next(line)) {
    if (line.empty()) continue;
    if (!vocab.contains(line)) throw Error(lines.where() + ": unknown action '" + line + "'");
    out.push_back(vocab.id(line));
  }
  if (expected_frames >= 0 && static_cast<int>(out.size()) != expected_frames)
    throw Error(path.string() + ": " + std::to_string(out.size()) + " labels for a video of " +
                std::to_string(expected_frames) + " frames");
  return out;
}

inline void write_labels(const fs::path& path, const FrameLabeling& labels, const Vocabulary& vocab) {
  auto out = io::open_out(path);
  for (ClassId c : labels) out << vocab.name(c) << '\n';
}

// ---------------------------------------------------------------- manifest

struct VideoRecord {
  std::string id;
  fs::path features;
  std::vector<std::string> set_names;
  std::optional<fs::path> labels;
};

struct CorpusManifest {
  Vocabulary vocabulary;
  std::vector<VideoRecord> videos;
};

inline CorpusManifest read_manifest(const fs::path& path) {
  auto in = io::open_in(path);
  io::Lines lines(in, path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](std::string_view p) {
    fs::path q{std::string(p)};
    return q.is_absolute() ? q : base / q;
  };
  CorpusManifest m;
  std::string line;
  bool have_vocab = false;
  while (lines.next(line)) {
    if (line.empty()) continue;
    auto fields = io::split(line, '\t');
    if (!have_vocab) {
      if (fields.size() != 2 || fields[0] != "#vocabulary")
        throw Error(lines.where() + ": first line must be '#vocabulary<TAB>names'");
      std::vector<std::string> names;
      for (auto t : io::tokens(fields[1])) names.emplace_back(t);
      if (names.empty()) throw Error(lines.where() + ": empty vocabulary");
      m.vocabulary = Vocabulary(std::move(names));
      have_vocab = true;
      continue;
    }
    if (fields.size() != 3 && fields.size() != 4)
      throw Error(lines.where() + ": expected 3 or 4 tab-separated fields, found " + std::to_string(fields.size()));
    VideoRecord r;
    r.id = std::string(fields[0]);
    if (r.id.empty()) throw Error(lines.where() + ": empty video id");
    r.features = resolve(fields[1]);
    if (!fs::exists(r.features)) throw Error(lines.where() + ": feature file '" + r.features.string() + "' not found");
    for (auto t : io::tokens(fields[2])) {
      if (!m.vocabulary.contains(std::string(t))) throw Error(lines.where() + ": unknown action '" + std::string(t) + "'");
      r.set_names.emplace_back(t);
    }
    if (r.set_names.empty()) throw Error(lines.where() + ": empty action set");
    if (fields.size() == 4) {
      r.labels = resolve(fields[3]);
      if (!fs::exists(*r.labels)) throw Error(lines.where() + ": label file '" + r.labels->string() + "' not found");
    }
    m.videos.push_back(std::move(r));
  }
  if (!have_vocab || m.videos.empty()) throw Error(path.string() + ": manifest lists no videos");
  return m;
}

inline void write_manifest(const fs::path& path, const Vocabulary& vocab, const std::vector<VideoRecord>& videos) {
  auto out = io::open_out(path);
  out << "#vocabulary\t";
  for (int c = 0; c < vocab.size(); ++c) out << (c ? " " : "") << vocab.name(c);
  out << '\n';
  for (const auto& v : videos) {
    out << v.id << '\t' << v.features.generic_string() << '\t';
    for (std::size_t i = 0; i < v.set_names.size(); ++i) out << (i ? " " : "") << v.set_names[i];
    if (v.labels) out << '\t' << v.labels->generic_string();
    out << '\n';
  }
}

/// A video loaded into memory. `labels` is filled only when the manifest
/// references a label file; training never reads it as supervision.
struct Video {
  std::string id;
  FrameFeatures features;
  ActionSet set;
  std::optional<FrameLabeling> labels;

  int frames() const { return features.frames(); }
};

struct Corpus {
  Vocabulary vocabulary;
  std::vector<Video> videos;

  std::vector<ActionSet> sets() const {
    std::vector<ActionSet> out;
    for (const auto& v : videos) out.push_back(v.set);
    return out;
  }
  TrainCorpusSummary summary() const {
    TrainCorpusSummary s{vocabulary.size(), {}};
    for (const auto& v : videos) s.videos.push_back({v.frames(), v.set});
    return s;
  }
};

inline Corpus load_corpus(const CorpusManifest& m) {
  Corpus c{m.vocabulary, {}};
  for (const auto& r : m.videos) {
    Video v{r.id, read_features(r.features), {}, std::nullopt};
    std::vector<ClassId> ids;
    for (const auto& n : r.set_names) ids.push_back(m.vocabulary.id(n));
    v.set = ActionSet(ids);
    if (r.labels) v.labels = read_labels(*r.labels, m.vocabulary, v.frames());
    c.videos.push_back(std::move(v));
  }
  return c;
}

inline Corpus load_corpus(const fs::path& manifest) { return load_corpus(read_manifest(manifest)); }

// -------------------------------------------------------------- checkpoint

struct Checkpoint {
  Vocabulary vocabulary;
  HmmParams hmm;
  MlpParams mlp;
  std::vector<ActionSet> training_sets;
  long iteration = 0;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.vocabulary == b.vocabulary && a.hmm == b.hmm && a.mlp == b.mlp && a.training_sets == b.training_sets &&
           a.iteration == b.iteration;
  }
};

namespace detail {

inline void write_tensor(std::ostream& os, const char* name, const Matrix& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << io::format_double(m(r, c));
    os << '\n';
  }
}

inline void write_tensor(std::ostream& os, const char* name, const Vector& v) {
  os << name << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << io::format_double(v(i));
  os << '\n';
}

inline std::vector<std::string_view> expect_header(io::Lines& lines, std::string& line, std::string_view name,
                                                   std::size_t dims) {
  if (!lines.next(line)) throw Error(lines.name() + ": missing tensor '" + std::string(name) + "'");
  auto t = io::tokens(line);
  if (t.empty() || t[0] != name || t.size() != dims + 1)
    throw Error(lines.where() + ": expected '" + std::string(name) + "' with " + std::to_string(dims) + " dimension(s)");
  return t;
}

inline Matrix read_matrix(io::Lines& lines, std::string_view name, long rows, long cols) {
  std::string line;
  auto h = expect_header(lines, line, name, 2);
  const long r = io::parse_int(h[1], lines.where()), c = io::parse_int(h[2], lines.where());
  if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols) || r < 0 || c < 0)
    throw Error(lines.where() + ": shape mismatch for '" + std::string(name) + "'");
  Matrix m(r, c);
  for (long i = 0; i < r; ++i) {
    if (!lines.next(line)) throw Error(lines.name() + ": truncated tensor '" + std::string(name) + "'");
    auto vals = io::tokens(line);
    if (static_cast<long>(vals.size()) != c) throw Error(lines.where() + ": shape mismatch for '" + std::string(name) + "'");
    for (long j = 0; j < c; ++j) m(i, j) = io::parse_double(vals[static_cast<std::size_t>(j)], lines.where());
  }
  return m;
}

inline Vector read_vector(io::Lines& lines, std::string_view name, long size) {
  std::string line;
  auto h = expect_header(lines, line, name, 1);
  const long n = io::parse_int(h[1], lines.where());
  if ((size >= 0 && n != size) || n < 0) throw Error(lines.where() + ": shape mismatch for '" + std::string(name) + "'");
  if (!lines.next(line)) throw Error(lines.name() + ": truncated tensor '" + std::string(name) + "'");
  auto vals = io::tokens(line);
  if (static_cast<long>(vals.size()) != n) throw Error(lines.where() + ": shape mismatch for '" + std::string(name) + "'");
  Vector v(n);
  for (long i = 0; i < n; ++i) v(i) = io::parse_double(vals[static_cast<std::size_t>(i)], lines.where());
  return v;
}

inline void expect_section(io::Lines& lines, std::string& line, const std::string& section) {
  while (lines.next(line)) {
    if (line.empty()) continue;
    if (line.rfind(section, 0) == 0) return;
    throw Error(lines.where() + ": expected section " + section);
  }
  throw Error(lines.name() + ": missing section " + section);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  const int K = ck.vocabulary.size();
  os << "[HMM]\nvocabulary " << K << '\n';
  for (int c = 0; c < K; ++c) os << (c ? " " : "") << ck.vocabulary.name(c);
  os << '\n';
  detail::write_tensor(os, "transitions", ck.hmm.transitions);
  detail::write_tensor(os, "lambdas", ck.hmm.lambdas);
  detail::write_tensor(os, "priors", ck.hmm.priors);
  os << "[MLP]\n";
  detail::write_tensor(os, "W1", ck.mlp.W1);
  detail::write_tensor(os, "b1", ck.mlp.b1);
  detail::write_tensor(os, "W2", ck.mlp.W2);
  detail::write_tensor(os, "b2", ck.mlp.b2);
  os << "[SETS] " << ck.training_sets.size() << '\n';
  for (const auto& s : ck.training_sets) {
    for (int i = 0; i < s.size(); ++i) os << (i ? " " : "") << ck.vocabulary.name(s[i]);
    os << '\n';
  }
  os << "[TRAIN]\niteration " << ck.iteration << '\n';
}

inline void write_checkpoint(const fs::path& path, const Checkpoint& ck) {
  auto out = io::open_out(path);
  write_checkpoint(out, ck);
}

inline Checkpoint parse_checkpoint(std::istream& in, const std::string& name) {
  io::Lines lines(in, name);
  std::string line;
  Checkpoint ck;
  detail::expect_section(lines, line, "[HMM]");
  auto h = detail::expect_header(lines, line, "vocabulary", 1);
  const long K = io::parse_int(h[1], lines.where());
  if (!lines.next(line)) throw Error(name + ": missing vocabulary names");
  std::vector<std::string> names;
  for (auto t : io::tokens(line)) names.emplace_back(t);
  if (static_cast<long>(names.size()) != K || K < 1) throw Error(lines.where() + ": vocabulary size mismatch");
  ck.vocabulary = Vocabulary(std::move(names));
  ck.hmm.transitions = detail::read_matrix(lines, "transitions", K, K);
  ck.hmm.lambdas = detail::read_vector(lines, "lambdas", K);
  ck.hmm.priors = detail::read_vector(lines, "priors", K);
  detail::expect_section(lines, line, "[MLP]");
  ck.mlp.W1 = detail::read_matrix(lines, "W1", -1, -1);
  ck.mlp.b1 = detail::read_vector(lines, "b1", ck.mlp.W1.rows());
  ck.mlp.W2 = detail::read_matrix(lines, "W2", K, ck.mlp.W1.rows());
  ck.mlp.b2 = detail::read_vector(lines, "b2", K);
  detail::expect_section(lines, line, "[SETS]");
  auto st = io::tokens(line);
  if (st.size() != 2) throw Error(lines.where() + ": expected '[SETS] count'");
  const long nsets = io::parse_int(st[1], lines.where());
  for (long i = 0; i < nsets; ++i) {
    if (!lines.next(line)) throw Error(name + ": truncated [SETS] section");
    std::vector<ClassId> ids;
    for (auto t : io::tokens(line)) {
      if (!ck.vocabulary.contains(std::string(t))) throw Error(lines.where() + ": unknown action '" + std::string(t) + "'");
      ids.push_back(ck.vocabulary.id(std::string(t)));
    }
    ck.training_sets.emplace_back(ids);
  }
  detail::expect_section(lines, line, "[TRAIN]");
  h = detail::expect_header(lines, line, "iteration", 1);
  ck.iteration = io::parse_int(h[1], lines.where());
  return ck;
}

inline Checkpoint read_checkpoint(const fs::path& path) {
  auto in = io::open_in(path);
  return parse_checkpoint(in, path.string());
}

// --------------------------------------------------------------- synthetic

struct SynthSpec {
  int classes = 5;
  int train_videos = 40;
  int test_videos = 10;
  int min_frames = 100;
  int max_frames = 300;
  int dim = 64;
  double separation = 3.0;  // distance between class means
  double noise = 1.0;       // isotropic per-coordinate standard deviation
  int min_set = 2;
  int max_set = 5;
  std::vector<double> length_means;  // per class; derived from the frame range when empty
  std::uint64_t seed = 0;

  void check() const {
    if (classes < 1 || train_videos < 1 || test_videos < 0 || dim < 1 || min_frames < 1 || max_frames < min_frames)
      throw Error("synth spec: counts must be >= 1 and min_frames <= max_frames");
    if (!(separation > 0.0) || !(noise >= 0.0)) throw Error("synth spec: separation must be > 0 and noise >= 0");
    if (min_set < 1 || max_set < min_set) throw Error("synth spec: invalid set size range");
    if (!length_means.empty() && static_cast<int>(length_means.size()) != classes)
      throw Error("synth spec: length_means must list one mean per class");
    for (double m : length_means)
      if (!(m >= 1.0)) throw Error("synth spec: length means must be >= 1");
  }

  std::vector<double> means() const {
    if (!length_means.empty()) return length_means;
    const int lo = std::min(min_set, classes), hi = std::min(max_set, classes);
    const double base = 0.5 * (min_frames + max_frames) / (0.5 * (lo + hi));
    std::vector<double> out;
    for (int c = 0; c < classes; ++c) out.push_back(base * (0.8 + 0.4 * (classes > 1 ? double(c) / (classes - 1) : 0.5)));
    return out;
  }
};

/// "key = value" lines; '#' starts a comment. length_means is space-separated.
inline SynthSpec parse_synth_spec(std::istream& in, const std::string& name) {
  io::Lines lines(in, name);
  SynthSpec s;
  std::string line;
  while (lines.next(line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (io::tokens(line).empty()) continue;
    if (eq == std::string::npos) throw Error(lines.where() + ": expected 'key = value'");
    auto key_tok = io::tokens(std::string_view(line).substr(0, eq));
    auto val = io::tokens(std::string_view(line).substr(eq + 1));
    if (key_tok.size() != 1 || val.empty()) throw Error(lines.where() + ": expected 'key = value'");
    const std::string key(key_tok[0]);
    const auto w = lines.where();
    auto one = [&]() {
      if (val.size() != 1) throw Error(w + ": '" + key + "' takes one value");
      return val[0];
    };
    if (key == "classes") s.classes = static_cast<int>(io::parse_int(one(), w));
    else if (key == "train_videos") s.train_videos = static_cast<int>(io::parse_int(one(), w));
    else if (key == "test_videos") s.test_videos = static_cast<int>(io::parse_int(one(), w));
    else if (key == "min_frames") s.min_frames = static_cast<int>(io::parse_int(one(), w));
    else if (key == "max_frames") s.max_frames = static_cast<int>(io::parse_int(one(), w));
    else if (key == "dim") s.dim = static_cast<int>(io::parse_int(one(), w));
    else if (key == "separation") s.separation = io::parse_double(one(), w);
    else if (key == "noise") s.noise = io::parse_double(one(), w);
    else if (key == "min_set") s.min_set = static_cast<int>(io::parse_int(one(), w));
    else if (key == "max_set") s.max_set = static_cast<int>(io::parse_int(one(), w));
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(io::parse_int(one(), w));
    else if (key == "length_means") {
      s.length_means.clear();
      for (auto v : val) s.length_means.push_back(io::parse_double(v, w));
    } else {
      throw Error(w + ": unknown key '" + key + "'");
    }
  }
  s.check();
  return s;
}

inline SynthSpec read_synth_spec(const fs::path& path) {
  auto in = io::open_in(path);
  return parse_synth_spec(in, path.string());
}

struct SynthVideo {
  Video video;  // labels always filled
  Segmentation truth;
  bool test = false;
};

struct SynthCorpus {
  Vocabulary vocabulary;
  std::vector<SynthVideo> videos;
  Matrix class_means;  // K x D

  Corpus split(bool test, bool with_labels) const {
    Corpus c{vocabulary, {}};
    for (const auto& v : videos) {
      if (v.test != test) continue;
      c.videos.push_back(v.video);
      if (!with_labels) c.videos.back().labels.reset();
    }
    return c;
  }
};

/// Seeded corpus: each video draws 2..5 distinct classes in random order,
/// Poisson lengths around the class means (rejected until T falls in the
/// frame range), and features = class mean + Gaussian noise.
inline SynthCorpus synth_generate(const SynthSpec& spec) {
  spec.check();
  const int K = spec.classes, D = spec.dim;
  std::mt19937_64 rng(spec.seed);
  SynthCorpus out;
  std::vector<std::string> names;
  for (int c = 0; c < K; ++c) names.push_back("action" + std::to_string(c));
  out.vocabulary = Vocabulary(names);

  // Orthogonal means scaled so every pair sits `separation` apart; with
  // D < K fall back to random directions at the same radius.
  out.class_means = Matrix::Zero(K, D);
  const double radius = spec.separation / std::sqrt(2.0);
  if (D >= K) {
    for (int c = 0; c < K; ++c) out.class_means(c, c) = radius;
  } else {
    std::normal_distribution<double> g(0.0, 1.0);
    for (int c = 0; c < K; ++c) {
      for (int d = 0; d < D; ++d) out.class_means(c, d) = g(rng);
      out.class_means.row(c) *= radius / out.class_means.row(c).norm();
    }
  }
  const auto means = spec.means();
  const int lo = std::min(spec.min_set, K), hi = std::min(spec.max_set, K);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int total = spec.train_videos + spec.test_videos;
  for (int v = 0; v < total; ++v) {
    std::vector<ClassId> order;
    std::vector<int> lens;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 100000) throw Error("synth_generate: cannot draw a video within the frame range");
      const int M = std::uniform_int_distribution<int>(lo, hi)(rng);
      std::vector<ClassId> all(static_cast<std::size_t>(K));
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      order.assign(all.begin(), all.begin() + M);
      lens.clear();
      int T = 0;
      for (ClassId c : order) {
        int l = std::max(1, static_cast<int>(std::poisson_distribution<int>(means[static_cast<std::size_t>(c)])(rng)));
        lens.push_back(l);
        T += l;
      }
      if (T >= spec.min_frames && T <= spec.max_frames) break;
    }
    Segmentation truth(order, lens);
    FrameLabeling labels = expand_segmentation(truth);
    Matrix x(static_cast<Eigen::Index>(labels.size()), D);
    for (std::size_t t = 0; t < labels.size(); ++t)
      for (int d = 0; d < D; ++d)
        x(static_cast<Eigen::Index>(t), d) = out.class_means(labels[t], d) + spec.noise * noise(rng);
    SynthVideo sv{{(v < spec.train_videos ? "train" : "test") + std::to_string(v), FrameFeatures(std::move(x)),
                   ActionSet(order), labels},
                  truth,
                  v >= spec.train_videos};
    out.videos.push_back(std::move(sv));
  }
  return out;
}

/// Writes features/, labels/ and four manifests: train.tsv and test.tsv carry
/// set-level labels only; train_gt.tsv and test_gt.tsv add the hidden frame
/// labels for evaluation.
inline void write_synth_corpus(const fs::path& dir, const SynthCorpus& corpus) {
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "labels");
  std::vector<VideoRecord> train, test, train_gt, test_gt;
  for (const auto& sv : corpus.videos) {
    const auto& v = sv.video;
    fs::path feat = fs::path("features") / (v.id + ".txt");
    fs::path lab = fs::path("labels") / (v.id + ".txt");
    write_features(dir / feat, v.features);
    write_labels(dir / lab, *v.labels, corpus.vocabulary);
    VideoRecord r{v.id, feat, {}, std::nullopt};
    for (ClassId c : v.set) r.set_names.push_back(corpus.vocabulary.name(c));
    VideoRecord g = r;
    g.labels = lab;
    (sv.test ? test : train).push_back(r);
    (sv.test ? test_gt : train_gt).push_back(g);
  }
  write_manifest(dir / "train.tsv", corpus.vocabulary, train);
  write_manifest(dir / "train_gt.tsv", corpus.vocabulary, train_gt);
  if (!test.empty()) {
    write_manifest(dir / "test.tsv", corpus.vocabulary, test);
    write_manifest(dir / "test_gt.tsv", corpus.vocabulary, test_gt);
  }
}

}  // namespace acvseg

#endif  // ACVSEG_DATA_HPP
