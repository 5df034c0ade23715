// Copyright 2026  The dtk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DTK_TESTS_ORACLES_H_
#define DTK_TESTS_ORACLES_H_

// Independent reference implementations used only by tests. They follow the
// textbook definitions directly and share no code with the library.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Exhaustive nearest centroid over row-major centroids, ties to lowest index.
inline std::pair<std::size_t, double> nearest_centroid(const std::vector<float> &frame,
                                                       const std::vector<double> &centroids,
                                                       std::size_t k) {
  const std::size_t dim = frame.size();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (std::size_t c = 0; c < k; ++c) {
    double d = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      double diff = double(frame[j]) - centroids[c * dim + j];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

// Plain recursive Levenshtein distance on prefixes a[0..i), b[0..j).
template <typename T>
std::size_t recursive_edit(const std::vector<T> &a, std::size_t i, const std::vector<T> &b,
                           std::size_t j) {
  if (i == 0) return j;
  if (j == 0) return i;
  if (a[i - 1] == b[j - 1]) return recursive_edit(a, i - 1, b, j - 1);
  std::size_t sub = recursive_edit(a, i - 1, b, j - 1);
  std::size_t del = recursive_edit(a, i - 1, b, j);
  std::size_t ins = recursive_edit(a, i, b, j - 1);
  return 1 + std::min(sub, std::min(del, ins));
}

template <typename T>
std::size_t recursive_edit(const std::vector<T> &a, const std::vector<T> &b) {
  return recursive_edit(a, a.size(), b, b.size());
}

// Exact probability that k-means++ with K = 2 on 1-D points puts its two
// seeds in different groups (group[i] labels point i).
inline double kmeanspp_split_probability(const std::vector<double> &points,
                                         const std::vector<int> &group) {
  const std::size_t n = points.size();
  double p = 0.0;
  for (std::size_t first = 0; first < n; ++first) {
    double total = 0.0, other = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = (points[j] - points[first]) * (points[j] - points[first]);
      total += d2;
      if (group[j] != group[first]) other += d2;
    }
    p += (1.0 / double(n)) * (other / total);
  }
  return p;
}

}  // namespace oracle

#endif  // DTK_TESTS_ORACLES_H_
