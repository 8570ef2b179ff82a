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

// Shared generators for the unit suites.

#ifndef ACVSEG_TESTS_TEST_UTIL_HPP
#define ACVSEG_TESTS_TEST_UTIL_HPP

#include "acvseg/acvseg.hpp"

#include <random>
#include <vector>

namespace acvseg::testing {

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

/// Strictly positive row-stochastic transitions without self-loops, lambdas
/// in [lo, hi], priors in (0, 1].
inline HmmParams random_hmm(int K, std::mt19937_64& rng, double lambda_lo = 2.0, double lambda_hi = 15.0) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  HmmParams h{Matrix::Zero(K, K), Vector(K), Vector(K)};
  for (int c = 0; c < K; ++c) {
    if (K == 1) {
      h.transitions(c, c) = 1.0;
    } else {
      for (int d = 0; d < K; ++d)
        if (d != c) h.transitions(c, d) = u(rng);
      h.transitions.row(c) /= h.transitions.row(c).sum();
    }
    h.lambdas(c) = std::uniform_real_distribution<double>(lambda_lo, lambda_hi)(rng);
    h.priors(c) = u(rng);
  }
  return h;
}

/// Random disjoint anchors for the classes of `set` in random temporal order.
inline AnchorSet random_anchors(const ActionSet& set, int T, std::mt19937_64& rng) {
  const int M = set.size();
  // choose 2M distinct boundaries, pair them into ordered disjoint intervals
  for (;;) {
    std::vector<int> pts(static_cast<std::size_t>(T));
    std::iota(pts.begin(), pts.end(), 0);
    std::shuffle(pts.begin(), pts.end(), rng);
    std::vector<int> chosen(pts.begin(), pts.begin() + std::min(T, 2 * M));
    if (static_cast<int>(chosen.size()) < 2 * M) {
      // short video: single-frame anchors on M distinct frames
      std::vector<int> f(pts.begin(), pts.begin() + M);
      std::sort(f.begin(), f.end());
      std::vector<ClassId> order(set.ids());
      std::shuffle(order.begin(), order.end(), rng);
      AnchorSet a;
      for (int i = 0; i < M; ++i) a.anchors.push_back({order[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i)]});
      return a;
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<ClassId> order(set.ids());
    std::shuffle(order.begin(), order.end(), rng);
    AnchorSet a;
    for (int i = 0; i < M; ++i) {
      int b = chosen[static_cast<std::size_t>(2 * i)], e = chosen[static_cast<std::size_t>(2 * i + 1)];
      a.anchors.push_back({order[static_cast<std::size_t>(i)], (b + e) / 2, b, e});
    }
    return a;
  }
}

inline ActionSet random_set(int K, int max_size, std::mt19937_64& rng) {
  std::vector<ClassId> all(static_cast<std::size_t>(K));
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  int m = std::uniform_int_distribution<int>(1, std::min(K, max_size))(rng);
  return ActionSet(std::vector<ClassId>(all.begin(), all.begin() + m));
}

/// Random instance: vocabulary of K classes, a set of <= cmax of them,
/// likelihood rows following the set.
inline ScoredInstance random_instance(int T, int K, int cmax, std::mt19937_64& rng) {
  ScoredInstance inst;
  inst.frames = T;
  inst.set = random_set(K, cmax, rng);
  inst.loglik = random_matrix(inst.set.size(), T, rng, -3.0, 0.0);
  inst.hmm = random_hmm(K, rng, 2.0, std::max(3.0, T / 1.5));
  return inst;
}

}  // namespace acvseg::testing

#endif  // ACVSEG_TESTS_TEST_UTIL_HPP
