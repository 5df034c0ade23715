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

#ifndef DTK_KMEANS_H_
#define DTK_KMEANS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtk/feature_store.h"

namespace dtk {

// K x D centroids, stored in double precision, plus training provenance.
class Codebook {
 public:
  Codebook() = default;
  Codebook(std::size_t k, std::size_t dim, std::vector<double> centroids);

  std::size_t cluster_size() const { return k_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> centroid(std::size_t i) const {
    return {centroids_.data() + i * dim_, dim_};
  }
  const std::vector<double> &centroids() const { return centroids_; }

  std::string train_language;
  int ssl_layer = 12;
  std::uint64_t seed = 0;
  double final_inertia = 0.0;
  std::uint64_t n_train_frames = 0;

  // Hex digest over K, D and the centroid bits. Provenance fields are not
  // included: two codebooks that tokenize identically share a fingerprint.
  std::string fingerprint() const;

  bool operator==(const Codebook &o) const;

 private:
  std::size_t k_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> centroids_;
};

enum class EmptyClusterPolicy { kReassignFarthest };

struct TrainConfig {
  int max_iterations = 300;
  double rel_tolerance = 1e-6;
  // nullopt = full batch (the default, and the only mode with monotone
  // inertia). A count selects mini-batch updates.
  std::optional<std::size_t> batch_size;
  EmptyClusterPolicy empty_cluster_policy = EmptyClusterPolicy::kReassignFarthest;
  int num_threads = 1;
};

struct Assignment {
  std::uint32_t token_id;
  double squared_distance;
};

double squared_distance(std::span<const float> frame, std::span<const double> centroid);

// Nearest centroid, ties to the lowest index.
Assignment assign(std::span<const float> frame, const Codebook &codebook);

// Number of bit-distinct rows.
std::size_t count_distinct_frames(const FeatureMatrix &frames);

// k-means++ seeding. Returns K x D row-major centroids, each a data frame.
std::vector<double> kmeanspp_init(const FeatureMatrix &frames, std::size_t k,
                                  std::uint64_t seed);

struct LloydResult {
  std::vector<double> centroids;
  // Measured against the input centroids, before the mean update.
  double inertia;
  std::size_t empty_repaired;
};

LloydResult lloyd_step(const FeatureMatrix &frames, std::span<const double> centroids,
                       std::size_t k, int num_threads = 1);

struct TrainResult {
  Codebook codebook;
  // Inertia reported by each full-batch Lloyd step, in order.
  std::vector<double> inertia_trace;
  int iterations = 0;
  bool converged = false;
};

TrainResult train_traced(const FeatureMatrix &frames, std::size_t k,
                         const TrainConfig &config, std::uint64_t seed);

inline Codebook train(const FeatureMatrix &frames, std::size_t k,
                      const TrainConfig &config, std::uint64_t seed) {
  return train_traced(frames, k, config, seed).codebook;
}

// Mean squared distance of every frame to its assigned centroid.
double quantization_error(std::span<const FeatureMatrix> matrices, const Codebook &codebook,
                          int num_threads = 1);

// Codebook container (.dtkc): "DTKC", uint32 version, uint32 K, uint32 D,
// K*D float64 little-endian, then a one-line JSON metadata trailer.
void save_codebook(const Codebook &codebook, const std::filesystem::path &path);
Codebook load_codebook(const std::filesystem::path &path);

}  // namespace dtk

#endif  // DTK_KMEANS_H_
