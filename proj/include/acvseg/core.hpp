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

// acvseg/core.hpp
//
// Shared domain types: label vocabulary, action sets, frame features,
// segmentations and frame labelings. Frames are 0-based throughout.

#ifndef ACVSEG_CORE_HPP
#define ACVSEG_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace acvseg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using ClassId = int;
using FrameLabeling = std::vector<ClassId>;

/// Ordered list of action names; the position of a name is its dense id.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw Error("vocabulary: empty action name");
      if (!index_.emplace(names_[i], static_cast<ClassId>(i)).second)
        throw Error("vocabulary: duplicate action name '" + names_[i] + "'");
    }
  }

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  const std::string& name(ClassId id) const {
    if (id < 0 || id >= size()) throw Error("vocabulary: id " + std::to_string(id) + " out of range");
    return names_[static_cast<std::size_t>(id)];
  }

  ClassId id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("vocabulary: unknown action '" + name + "'");
    return it->second;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ClassId> index_;
};

/// Set-level ground truth of one video: sorted, duplicate-free class ids.
class ActionSet {
 public:
  ActionSet() = default;
  explicit ActionSet(std::vector<ClassId> ids) : ids_(std::move(ids)) {
    if (ids_.empty()) throw Error("action set: empty");
    std::sort(ids_.begin(), ids_.end());
    if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
      throw Error("action set: duplicate label");
    if (ids_.front() < 0) throw Error("action set: negative label");
  }
  ActionSet(std::initializer_list<ClassId> ids) : ActionSet(std::vector<ClassId>(ids)) {}

  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<ClassId>& ids() const { return ids_; }
  ClassId operator[](int i) const { return ids_[static_cast<std::size_t>(i)]; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  bool contains(ClassId c) const { return std::binary_search(ids_.begin(), ids_.end(), c); }

  /// Row index of `c` within the set, or -1.
  int index_of(ClassId c) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), c);
    return (it != ids_.end() && *it == c) ? static_cast<int>(it - ids_.begin()) : -1;
  }

  void check_within(int num_classes) const {
    if (!ids_.empty() && ids_.back() >= num_classes)
      throw Error("action set: label " + std::to_string(ids_.back()) + " outside vocabulary of size " +
                  std::to_string(num_classes));
  }

  friend bool operator==(const ActionSet& a, const ActionSet& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<ClassId> ids_;
};

/// T x D matrix of per-frame descriptors, one row per frame.
class FrameFeatures {
 public:
  FrameFeatures() = default;
  explicit FrameFeatures(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) throw Error("features: T and D must be >= 1");
    if (!values_.allFinite()) throw Error("features: non-finite value");
  }

  int frames() const { return static_cast<int>(values_.rows()); }
  int dim() const { return static_cast<int>(values_.cols()); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// Ordered action labels with positive integer lengths.
class Segmentation {
 public:
  Segmentation() = default;
  Segmentation(std::vector<ClassId> actions, std::vector<int> lengths)
      : actions_(std::move(actions)), lengths_(std::move(lengths)) {
    if (actions_.empty()) throw Error("segmentation: no segments");
    if (actions_.size() != lengths_.size()) throw Error("segmentation: actions/lengths size mismatch");
    for (int l : lengths_)
      if (l < 1) throw Error("segmentation: segment length must be >= 1");
  }

  int size() const { return static_cast<int>(actions_.size()); }
  const std::vector<ClassId>& actions() const { return actions_; }
  const std::vector<int>& lengths() const { return lengths_; }
  int total() const { return std::accumulate(lengths_.begin(), lengths_.end(), 0); }

  friend bool operator==(const Segmentation& a, const Segmentation& b) {
    return a.actions_ == b.actions_ && a.lengths_ == b.lengths_;
  }

 private:
  std::vector<ClassId> actions_;
  std::vector<int> lengths_;
};

/// Labeled half-open frame interval [begin, end).
struct Segment {
  ClassId label;
  int begin;
  int end;
  int length() const { return end - begin; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

inline FrameLabeling expand_segmentation(const Segmentation& seg) {
  FrameLabeling out;
  out.reserve(static_cast<std::size_t>(seg.total()));
  for (int n = 0; n < seg.size(); ++n)
    out.insert(out.end(), static_cast<std::size_t>(seg.lengths()[n]), seg.actions()[n]);
  return out;
}

/// Run-length encoding of a frame labeling.
inline Segmentation run_length(const FrameLabeling& labels) {
  if (labels.empty()) throw Error("run_length: empty labeling");
  std::vector<ClassId> actions;
  std::vector<int> lengths;
  for (ClassId c : labels) {
    if (!actions.empty() && actions.back() == c) {
      ++lengths.back();
    } else {
      actions.push_back(c);
      lengths.push_back(1);
    }
  }
  return {std::move(actions), std::move(lengths)};
}

inline std::vector<Segment> to_segments(const Segmentation& seg) {
  std::vector<Segment> out;
  int t = 0;
  for (int n = 0; n < seg.size(); ++n) {
    out.push_back({seg.actions()[n], t, t + seg.lengths()[n]});
    t += seg.lengths()[n];
  }
  return out;
}

inline std::vector<Segment> to_segments(const FrameLabeling& labels) { return to_segments(run_length(labels)); }

/// True iff the lengths tile [0, T) and every label of `set` occurs at least once.
inline bool validate_segmentation(const Segmentation& seg, int T, const ActionSet& set) {
  if (seg.size() < 1 || seg.total() != T) return false;
  for (int l : seg.lengths())
    if (l < 1) return false;
  for (ClassId c : set)
    if (std::find(seg.actions().begin(), seg.actions().end(), c) == seg.actions().end()) return false;
  return true;
}

/// log(p) with log(0) = -inf.
/// splitmix64 finalizer; forks independent streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t label) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (label + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Fixed labels for forked RNG streams.
enum class Stream : std::uint64_t { kInit = 1, kPretrain = 2, kTrain = 3, kInfer = 4, kSynth = 5 };

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) { return mix_seed(seed, static_cast<std::uint64_t>(s)); }

inline double safe_log(double p) {
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

}  // namespace acvseg

#endif  // ACVSEG_CORE_HPP
