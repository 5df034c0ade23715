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

#include "dtk/kmeans.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "byte_io.h"
#include "dtk/errors.h"
#include "dtk/parallel.h"
#include "dtk/random.h"
#include "json.hpp"

namespace dtk {

Codebook::Codebook(std::size_t k, std::size_t dim, std::vector<double> centroids)
    : k_(k), dim_(dim), centroids_(std::move(centroids)) {
  if (centroids_.size() != k * dim)
    throw DimensionMismatch("codebook data size does not match K x D");
}

std::string Codebook::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(k_);
  feed(dim_);
  for (double c : centroids_) feed(std::bit_cast<std::uint64_t>(c));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool Codebook::operator==(const Codebook &o) const {
  if (k_ != o.k_ || dim_ != o.dim_ || train_language != o.train_language ||
      ssl_layer != o.ssl_layer || seed != o.seed || n_train_frames != o.n_train_frames ||
      std::bit_cast<std::uint64_t>(final_inertia) !=
          std::bit_cast<std::uint64_t>(o.final_inertia))
    return false;
  for (std::size_t i = 0; i < centroids_.size(); ++i)
    if (std::bit_cast<std::uint64_t>(centroids_[i]) !=
        std::bit_cast<std::uint64_t>(o.centroids_[i]))
      return false;
  return true;
}

double squared_distance(std::span<const float> frame, std::span<const double> centroid) {
  double acc = 0.0;
  for (std::size_t d = 0; d < frame.size(); ++d) {
    double diff = static_cast<double>(frame[d]) - centroid[d];
    acc += diff * diff;
  }
  return acc;
}

namespace {

Assignment nearest(std::span<const float> frame, const double *centroids, std::size_t k,
                   std::size_t dim) {
  Assignment best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < k; ++c) {
    double dist = squared_distance(frame, {centroids + c * dim, dim});
    if (dist < best.squared_distance) best = {static_cast<std::uint32_t>(c), dist};
  }
  return best;
}

void assign_all(const FeatureMatrix &frames, std::span<const double> centroids,
                std::size_t k, int num_threads, std::vector<Assignment> &out) {
  out.resize(frames.n_frames());
  parallel_for(frames.n_frames(), num_threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t)
      out[t] = nearest(frames.row(t), centroids.data(), k, frames.dim());
  });
}

void check_k(std::size_t k) {
  if (k < 2) throw std::invalid_argument("cluster size K must be >= 2, got " + std::to_string(k));
}

}  // namespace

Assignment assign(std::span<const float> frame, const Codebook &codebook) {
  if (frame.size() != codebook.dim())
    throw DimensionMismatch("frame dim " + std::to_string(frame.size()) +
                            " != codebook dim " + std::to_string(codebook.dim()));
  return nearest(frame, codebook.centroids().data(), codebook.cluster_size(),
                 codebook.dim());
}

std::size_t count_distinct_frames(const FeatureMatrix &frames) {
  const std::size_t n = frames.n_frames();
  if (n == 0) return 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = frames.row(a), rb = frames.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < n; ++i)
    if (less(order[i - 1], order[i])) ++distinct;
  return distinct;
}

std::vector<double> kmeanspp_init(const FeatureMatrix &frames, std::size_t k,
                                  std::uint64_t seed) {
  check_k(k);
  const std::size_t n = frames.n_frames(), dim = frames.dim();
  if (count_distinct_frames(frames) < k)
    throw InsufficientDataError("k-means++ needs at least " + std::to_string(k) +
                                " distinct frames");
  Rng rng(seed);
  std::vector<double> centroids;
  centroids.reserve(k * dim);
  auto take = [&](std::size_t t) {
    for (float v : frames.row(t)) centroids.push_back(v);
  };

  take(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1)));
  std::vector<double> d2(n);
  for (std::size_t t = 0; t < n; ++t)
    d2[t] = squared_distance(frames.row(t), {centroids.data(), dim});

  while (centroids.size() < k * dim) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (!(total > 0.0)) throw InsufficientDataError("k-means++ ran out of distinct frames");
    const double target = rng.uniform() * total;
    double cum = 0.0;
    std::size_t pick = n;
    std::size_t last_positive = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (d2[t] <= 0.0) continue;
      last_positive = t;
      cum += d2[t];
      if (cum > target) {
        pick = t;
        break;
      }
    }
    if (pick == n) pick = last_positive;  // rounding at the top end
    take(pick);
    std::span<const double> added{centroids.data() + centroids.size() - dim, dim};
    for (std::size_t t = 0; t < n; ++t)
      d2[t] = std::min(d2[t], squared_distance(frames.row(t), added));
  }
  return centroids;
}

LloydResult lloyd_step(const FeatureMatrix &frames, std::span<const double> centroids,
                       std::size_t k, int num_threads) {
  const std::size_t n = frames.n_frames(), dim = frames.dim();
  if (centroids.size() != k * dim)
    throw DimensionMismatch("centroid matrix does not match K x frame dim");
  for (double c : centroids)
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite centroid");

  std::vector<Assignment> assigned;
  assign_all(frames, centroids, k, num_threads, assigned);

  LloydResult result{std::vector<double>(k * dim, 0.0), 0.0, 0};
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto &a = assigned[t];
    result.inertia += a.squared_distance;
    ++counts[a.token_id];
    double *sum = result.centroids.data() + a.token_id * dim;
    auto row = frames.row(t);
    for (std::size_t d = 0; d < dim; ++d) sum[d] += row[d];
  }
  for (std::size_t c = 0; c < k; ++c) {
    double *mean = result.centroids.data() + c * dim;
    if (counts[c] == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(counts[c]);
  }

  // Empty clusters take the frames worst served by their current centroid.
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = 0;
    double far_dist = -1.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (assigned[t].squared_distance > far_dist) {
        far_dist = assigned[t].squared_distance;
        far = t;
      }
    }
    auto row = frames.row(far);
    std::copy(row.begin(), row.end(), result.centroids.begin() + c * dim);
    assigned[far].squared_distance = 0.0;
    ++result.empty_repaired;
  }
  return result;
}

namespace {

double total_inertia(const FeatureMatrix &frames, std::span<const double> centroids,
                     std::size_t k, int num_threads) {
  std::vector<Assignment> assigned;
  assign_all(frames, centroids, k, num_threads, assigned);
  double sum = 0.0;
  for (const auto &a : assigned) sum += a.squared_distance;
  return sum;
}

void minibatch_iterations(const FeatureMatrix &frames, std::vector<double> &centroids,
                          std::size_t k, const TrainConfig &config, std::uint64_t seed,
                          TrainResult &out) {
  const std::size_t n = frames.n_frames(), dim = frames.dim();
  const std::size_t batch = std::max<std::size_t>(1, *config.batch_size);
  Rng rng(derive_seed(seed, "minibatch"));
  std::vector<std::uint64_t> seen(k, 0);
  std::vector<std::size_t> picks(batch);
  std::vector<std::uint32_t> labels(batch);
  double smoothed = -1.0;
  for (int it = 0; it < config.max_iterations; ++it) {
    for (auto &p : picks)
      p = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    double batch_inertia = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      auto a = nearest(frames.row(picks[b]), centroids.data(), k, dim);
      labels[b] = a.token_id;
      batch_inertia += a.squared_distance;
    }
    for (std::size_t b = 0; b < batch; ++b) {
      const auto c = labels[b];
      const double lr = 1.0 / static_cast<double>(++seen[c]);
      double *mean = centroids.data() + c * dim;
      auto row = frames.row(picks[b]);
      for (std::size_t d = 0; d < dim; ++d) mean[d] += lr * (row[d] - mean[d]);
    }
    batch_inertia /= static_cast<double>(batch);
    out.inertia_trace.push_back(batch_inertia);
    out.iterations = it + 1;
    // Exponentially smoothed batch inertia stands in for the full objective.
    double next = smoothed < 0 ? batch_inertia : 0.7 * smoothed + 0.3 * batch_inertia;
    if (smoothed > 0 && std::abs(smoothed - next) < config.rel_tolerance * smoothed) {
      out.converged = true;
      break;
    }
    smoothed = next;
  }
}

}  // namespace

TrainResult train_traced(const FeatureMatrix &frames, std::size_t k,
                         const TrainConfig &config, std::uint64_t seed) {
  if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(config.rel_tolerance > 0.0)) throw std::invalid_argument("rel_tolerance must be > 0");
  TrainResult out;
  std::vector<double> centroids = kmeanspp_init(frames, k, seed);

  if (config.batch_size) {
    minibatch_iterations(frames, centroids, k, config, seed, out);
  } else {
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < config.max_iterations; ++it) {
      LloydResult step = lloyd_step(frames, centroids, k, config.num_threads);
      out.inertia_trace.push_back(step.inertia);
      out.iterations = it + 1;
      centroids = std::move(step.centroids);
      if (step.inertia == 0.0 ||
          (std::isfinite(prev) && (prev - step.inertia) < config.rel_tolerance * prev)) {
        out.converged = true;
        break;
      }
      prev = step.inertia;
    }
  }

  const std::size_t dim = frames.dim();
  out.codebook = Codebook(k, dim, std::move(centroids));
  out.codebook.seed = seed;
  out.codebook.n_train_frames = frames.n_frames();
  out.codebook.final_inertia =
      total_inertia(frames, out.codebook.centroids(), k, config.num_threads);
  return out;
}

double quantization_error(std::span<const FeatureMatrix> matrices, const Codebook &codebook,
                          int num_threads) {
  std::size_t total_frames = 0;
  double sum = 0.0;
  std::vector<Assignment> assigned;
  for (const auto &m : matrices) {
    if (m.empty()) continue;
    if (m.dim() != codebook.dim())
      throw DimensionMismatch("feature dim " + std::to_string(m.dim()) +
                              " != codebook dim " + std::to_string(codebook.dim()));
    assign_all(m, codebook.centroids(), codebook.cluster_size(), num_threads, assigned);
    for (const auto &a : assigned) sum += a.squared_distance;
    total_frames += m.n_frames();
  }
  if (total_frames == 0) throw InsufficientDataError("quantization error of an empty set");
  return sum / static_cast<double>(total_frames);
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kCodebookMagic[4] = {'D', 'T', 'K', 'C'};
constexpr std::uint32_t kCodebookVersion = 1;
}  // namespace

void save_codebook(const Codebook &cb, const std::filesystem::path &path) {
  internal::ByteWriter w;
  w.bytes(kCodebookMagic, 4);
  w.u32(kCodebookVersion);
  w.u32(static_cast<std::uint32_t>(cb.cluster_size()));
  w.u32(static_cast<std::uint32_t>(cb.dim()));
  for (double c : cb.centroids()) w.f64(c);
  nlohmann::ordered_json meta;
  meta["train_language"] = cb.train_language;
  meta["ssl_layer"] = cb.ssl_layer;
  meta["seed"] = cb.seed;
  meta["final_inertia"] = cb.final_inertia;
  meta["n_train_frames"] = cb.n_train_frames;
  std::string trailer = meta.dump() + "\n";
  w.bytes(trailer.data(), trailer.size());
  internal::write_file_bytes(path, w.buffer());
}

Codebook load_codebook(const std::filesystem::path &path) {
  const auto bytes = internal::read_file_bytes(path);
  const std::string src = path.string();
  internal::ByteReader r(bytes);
  if (r.remaining() < 4) throw TruncatedError(src + ": codebook header truncated");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kCodebookMagic, 4) != 0)
    throw BadMagicError(src + ": not a DTKC codebook");
  if (r.remaining() < 12) throw TruncatedError(src + ": codebook header truncated");
  if (auto v = r.u32(); v != kCodebookVersion)
    throw VersionError(src + ": unsupported codebook version " + std::to_string(v));
  const std::size_t k = r.u32(), dim = r.u32();
  if (k < 2 || dim < 1) throw FormatError(src + ": invalid codebook shape");
  if (r.remaining() < k * dim * 8) throw TruncatedError(src + ": centroid payload truncated");
  std::vector<double> centroids(k * dim);
  for (auto &c : centroids) {
    c = r.f64();
    if (!std::isfinite(c)) throw NonFiniteError(src + ": non-finite centroid");
  }
  Codebook cb(k, dim, std::move(centroids));
  auto rest = r.rest();
  try {
    auto meta = nlohmann::json::parse(rest.begin(), rest.end());
    cb.train_language = meta.at("train_language").get<std::string>();
    cb.ssl_layer = meta.at("ssl_layer").get<int>();
    cb.seed = meta.at("seed").get<std::uint64_t>();
    cb.final_inertia = meta.at("final_inertia").get<double>();
    cb.n_train_frames = meta.at("n_train_frames").get<std::uint64_t>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(src + ": bad codebook metadata trailer: " + e.what());
  }
  return cb;
}

}  // namespace dtk
