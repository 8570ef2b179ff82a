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

// acvseg/eval.hpp
//
// Frame accuracy (Mof), intersection over detection (IoD), midpoint hit and
// anchor IoD. Segments are half-open [begin, end); anchors are inclusive.

#ifndef ACVSEG_EVAL_HPP
#define ACVSEG_EVAL_HPP

#include "acvseg/acv.hpp"
#include "acvseg/core.hpp"

#include <algorithm>
#include <vector>

namespace acvseg {

/// Accumulates a ratio across videos (frame- or segment-weighted).
struct Ratio {
  double hits = 0.0;
  double total = 0.0;

  double value() const { return total > 0.0 ? hits / total : 0.0; }
  Ratio& operator+=(const Ratio& o) {
    hits += o.hits;
    total += o.total;
    return *this;
  }
};

inline Ratio mof_counts(const FrameLabeling& pred, const FrameLabeling& gt) {
  if (pred.size() != gt.size())
    throw Error("mof: prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                std::to_string(gt.size()));
  Ratio r{0.0, static_cast<double>(gt.size())};
  for (std::size_t t = 0; t < gt.size(); ++t) r.hits += pred[t] == gt[t] ? 1.0 : 0.0;
  return r;
}

inline double mof(const FrameLabeling& pred, const FrameLabeling& gt) { return mof_counts(pred, gt).value(); }

/// Sum over detections of |GT n D| / |D| with GT the same-label ground-truth
/// segment of largest overlap; `total` counts detections.
inline Ratio iod_counts(const std::vector<Segment>& pred, const std::vector<Segment>& gt) {
  Ratio r;
  for (const auto& d : pred) {
    if (d.length() <= 0) continue;
    int best = 0;
    for (const auto& g : gt) {
      if (g.label != d.label) continue;
      best = std::max(best, std::min(d.end, g.end) - std::max(d.begin, g.begin));
    }
    r.hits += static_cast<double>(best) / d.length();
    r.total += 1.0;
  }
  return r;
}

inline double iod(const std::vector<Segment>& pred, const std::vector<Segment>& gt) { return iod_counts(pred, gt).value(); }

/// A detection hits when its midpoint frame lies in an unclaimed same-label
/// ground-truth segment; detections claim in order of midpoint. `total`
/// counts ground-truth segments.
inline Ratio midpoint_counts(const std::vector<Segment>& pred, const std::vector<Segment>& gt) {
  std::vector<std::pair<int, ClassId>> mids;
  for (const auto& d : pred)
    if (d.length() > 0) mids.emplace_back(d.begin + (d.length() - 1) / 2, d.label);
  std::stable_sort(mids.begin(), mids.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<bool> claimed(gt.size(), false);
  Ratio r{0.0, static_cast<double>(gt.size())};
  for (const auto& [mid, label] : mids) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (claimed[g] || gt[g].label != label || mid < gt[g].begin || mid >= gt[g].end) continue;
      claimed[g] = true;
      r.hits += 1.0;
      break;
    }
  }
  return r;
}

inline double midpoint_hit(const std::vector<Segment>& pred, const std::vector<Segment>& gt) {
  return midpoint_counts(pred, gt).value();
}

inline std::vector<Segment> anchor_segments(const AnchorSet& anchors) {
  std::vector<Segment> out;
  for (const auto& a : anchors.anchors) out.push_back({a.action, a.begin, a.end + 1});
  return out;
}

inline Ratio anchor_iod_counts(const AnchorSet& anchors, const std::vector<Segment>& gt) {
  return iod_counts(anchor_segments(anchors), gt);
}

inline double anchor_iod(const AnchorSet& anchors, const std::vector<Segment>& gt) {
  return anchor_iod_counts(anchors, gt).value();
}

/// Corpus totals of the three frame and segment metrics.
struct MetricTotals {
  Ratio mof;
  Ratio iod;
  Ratio midpoint;

  void add(const FrameLabeling& pred, const FrameLabeling& gt) {
    mof += mof_counts(pred, gt);
    const auto p = to_segments(pred), g = to_segments(gt);
    iod += iod_counts(p, g);
    midpoint += midpoint_counts(p, g);
  }
};

}  // namespace acvseg

#endif  // ACVSEG_EVAL_HPP
