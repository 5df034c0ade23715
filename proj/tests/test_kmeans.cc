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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "dtk/accent_sim.h"
#include "dtk/errors.h"
#include "dtk/kmeans.h"
#include "oracles.h"
#include "test_util.h"

using namespace dtk;

namespace {

std::vector<float> row_vec(const FeatureMatrix &m, std::size_t t) {
  auto r = m.row(t);
  return {r.begin(), r.end()};
}

Codebook make_codebook(std::vector<double> c, std::size_t dim) {
  std::size_t k = c.size() / dim;
  return Codebook(k, dim, std::move(c));
}

}  // namespace

TEST_CASE("k-means++ with two distinct points picks both") {
  auto frames = testing::column({0.0f, 10.0f, 0.0f, 10.0f});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = kmeanspp_init(frames, 2, seed);
    std::multiset<double> got(c.begin(), c.end());
    CHECK(got == std::multiset<double>{0.0, 10.0});
  }
}

TEST_CASE("k-means++ preconditions") {
  auto frames = testing::column({0.0f, 1.0f, 2.0f});
  CHECK_THROWS_AS(kmeanspp_init(frames, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(kmeanspp_init(testing::column({1.0f, 1.0f, 1.0f}), 2, 0),
                  InsufficientDataError);
  CHECK(count_distinct_frames(testing::column({1.0f, -0.0f, 0.0f, 1.0f})) == 2);
}

TEST_CASE("k-means++ seeding distribution on {0,1,9,10}") {
  const std::vector<double> pts = {0, 1, 9, 10};
  const double exact = oracle::kmeanspp_split_probability(pts, {0, 0, 1, 1});
  // 181/182 and 145/146 averaged over the uniform first pick.
  CHECK(exact == doctest::Approx((181.0 / 182 + 145.0 / 146) / 2).epsilon(1e-12));

  auto frames = testing::column({0.0f, 1.0f, 9.0f, 10.0f});
  int split = 0;
  const int runs = 1000;
  for (int seed = 0; seed < runs; ++seed) {
    auto c = kmeanspp_init(frames, 2, static_cast<std::uint64_t>(seed));
    CHECK(std::find(pts.begin(), pts.end(), c[0]) != pts.end());
    CHECK(std::find(pts.begin(), pts.end(), c[1]) != pts.end());
    if ((c[0] < 5) != (c[1] < 5)) ++split;
  }
  const double rate = split / double(runs);
  CHECK(rate >= 0.99);
  const double sigma = std::sqrt(exact * (1 - exact) / runs);
  CHECK(std::abs(rate - exact) <= 4 * sigma);
}

TEST_CASE("k-means++ centroids are distinct data frames") {
  auto frames = testing::random_matrix(300, 3, 5);
  auto c = kmeanspp_init(frames, 16, 9);
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < 16; ++i) {
    std::vector<double> ci(c.begin() + i * 3, c.begin() + (i + 1) * 3);
    bool is_frame = false;
    for (std::size_t t = 0; t < frames.n_frames() && !is_frame; ++t) {
      auto r = frames.row(t);
      is_frame = std::equal(r.begin(), r.end(), ci.begin());
    }
    CHECK(is_frame);
    seen.insert(ci);
  }
  CHECK(seen.size() == 16);
}

TEST_CASE("lloyd step examples") {
  SUBCASE("fixed point") {
    auto r = lloyd_step(testing::column({0.0f, 2.0f}), std::vector<double>{0.0, 2.0}, 2);
    CHECK(r.centroids == std::vector<double>{0.0, 2.0});
    CHECK(r.inertia == 0.0);
  }
  SUBCASE("two pairs") {
    auto frames = testing::column({0.0f, 1.0f, 9.0f, 10.0f});
    std::vector<double> init = {0.0, 10.0};
    auto r = lloyd_step(frames, init, 2);
    // Oracle: exhaustive nearest-centroid scan, then means.
    std::vector<double> sum(2, 0.0), cnt(2, 0.0);
    double inertia = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
      auto [c, d] = oracle::nearest_centroid(row_vec(frames, t), init, 2);
      sum[c] += frames(t, 0);
      cnt[c] += 1;
      inertia += d;
    }
    CHECK(inertia == 2.0);
    CHECK(r.inertia == inertia);
    CHECK(r.centroids[0] == sum[0] / cnt[0]);
    CHECK(r.centroids[1] == sum[1] / cnt[1]);
    CHECK(r.centroids == std::vector<double>{0.5, 9.5});
  }
  SUBCASE("ties go to the lower index") {
    auto cb = make_codebook({0.0, 2.0}, 1);
    float f = 1.0f;
    CHECK(assign(std::span<const float>(&f, 1), cb).token_id == 0);
    auto r = lloyd_step(testing::column({1.0f, 2.0f}), std::vector<double>{0.0, 2.0}, 2);
    CHECK(r.centroids[0] == 1.0);
  }
  SUBCASE("empty cluster moves to the worst-served frame") {
    auto frames = testing::column({0.0f, 1.0f, 2.0f, 3.0f});
    auto r = lloyd_step(frames, std::vector<double>{1.5, 100.0}, 2);
    CHECK(r.empty_repaired == 1);
    CHECK(r.centroids[0] == 1.5);
    CHECK(r.centroids[1] == 0.0);  // frames 0 and 3 tie at 2.25; lowest index wins
    CHECK(r.inertia == doctest::Approx(5.0));
  }
  SUBCASE("non-finite centroid is rejected") {
    CHECK_THROWS_AS(lloyd_step(testing::column({0.0f, 1.0f}),
                               std::vector<double>{0.0, std::nan("")}, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("training on two tight blobs recovers the blob means") {
  FeatureMatrix frames(0, 0);
  dtk::Rng rng(42);
  FeatureMatrix blobs(200, 2);
  double mean_a[2] = {0, 0}, mean_b[2] = {0, 0};
  for (std::size_t t = 0; t < 200; ++t) {
    const bool b = t % 2;
    for (int d = 0; d < 2; ++d) {
      float v = static_cast<float>((b ? 50.0 : -50.0) + 0.01 * rng.normal());
      blobs(t, d) = v;
      (b ? mean_b : mean_a)[d] += v / 100.0;
    }
  }
  auto cb = train(blobs, 2, TrainConfig{}, 3);
  std::size_t a = cb.centroid(0)[0] < 0 ? 0 : 1;
  for (int d = 0; d < 2; ++d) {
    CHECK(std::abs(cb.centroid(a)[d] - mean_a[d]) < 1e-9);
    CHECK(std::abs(cb.centroid(1 - a)[d] - mean_b[d]) < 1e-9);
  }
  CHECK(cb.n_train_frames == 200);
  CHECK(cb.seed == 3);
}

TEST_CASE("K equal to the number of distinct frames gives zero inertia") {
  auto frames = testing::column({3.0f, 1.0f, 4.0f, 1.0f, 5.0f, 9.0f, 2.0f, 6.0f});
  auto cb = train(frames, count_distinct_frames(frames), TrainConfig{}, 11);
  CHECK(cb.final_inertia == 0.0);
  FeatureMatrix held[] = {frames};
  CHECK(quantization_error(held, cb) == 0.0);
}

TEST_CASE("training is deterministic and thread-count independent") {
  auto frames = testing::random_matrix(2000, 8, 77);
  TrainConfig one;
  TrainConfig four;
  four.num_threads = 4;
  auto a = train(frames, 16, one, 5);
  auto b = train(frames, 16, one, 5);
  auto c = train(frames, 16, four, 5);
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a.fingerprint() == c.fingerprint());
  CHECK_FALSE(a == train(frames, 16, one, 6));
}

TEST_CASE("full-batch inertia never increases") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto frames = testing::random_matrix(1500, 4, 1000 + seed);
    auto r = train_traced(frames, 12, TrainConfig{}, seed);
    REQUIRE(r.inertia_trace.size() >= 2);
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
      CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1] * (1 + 1e-6));
    CHECK(r.codebook.final_inertia <= r.inertia_trace.back() * (1 + 1e-6));
  }
}

TEST_CASE("train honours config validation and mini-batch mode") {
  auto frames = testing::random_matrix(500, 3, 8);
  TrainConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(train(frames, 4, bad, 1), std::invalid_argument);
  bad = TrainConfig{};
  bad.rel_tolerance = 0;
  CHECK_THROWS_AS(train(frames, 4, bad, 1), std::invalid_argument);

  TrainConfig mb;
  mb.batch_size = 64;
  mb.max_iterations = 200;
  auto init = kmeanspp_init(frames, 8, 2);
  LloydResult at_init = lloyd_step(frames, init, 8);
  auto cb = train(frames, 8, mb, 2);
  CHECK(cb.final_inertia < at_init.inertia);
  CHECK(cb == train(frames, 8, mb, 2));
}

TEST_CASE("assign examples") {
  auto frames = testing::random_matrix(10, 3, 4);
  std::vector<double> c;
  for (std::size_t t = 0; t < 10; ++t)
    for (float v : frames.row(t)) c.push_back(v);
  auto cb = make_codebook(c, 3);
  auto a = assign(frames.row(7), cb);
  CHECK(a.token_id == 7);
  CHECK(a.squared_distance == 0.0);

  auto cb2 = make_codebook({0.0, 3.0}, 1);
  float one = 1.0f;
  auto b = assign(std::span<const float>(&one, 1), cb2);
  CHECK(b.token_id == 0);
  CHECK(b.squared_distance == 1.0);

  float two[2] = {1, 2};
  CHECK_THROWS_AS(assign(std::span<const float>(two, 2), cb2), DimensionMismatch);
}

TEST_CASE("assign matches an exhaustive scan") {
  auto data = testing::random_matrix(128, 6, 1);
  std::vector<double> c(data.data().begin(), data.data().end());
  auto cb = make_codebook(c, 6);
  auto probes = testing::random_matrix(300, 6, 2);
  for (std::size_t t = 0; t < probes.n_frames(); ++t) {
    auto got = assign(probes.row(t), cb);
    auto [id, d] = oracle::nearest_centroid(row_vec(probes, t), c, 128);
    CHECK(got.token_id == id);
    CHECK(got.squared_distance == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("quantization error definition") {
  auto cb = make_codebook({0.0, 10.0}, 1);
  FeatureMatrix exact[] = {testing::column({0.0f, 10.0f, 10.0f})};
  CHECK(quantization_error(exact, cb) == 0.0);
  FeatureMatrix two[] = {testing::column({1.0f}), testing::column({7.0f})};
  CHECK(quantization_error(two, cb) == 5.0);
  CHECK_THROWS_AS(quantization_error(std::span<const FeatureMatrix>(), cb), InsufficientDataError);
  FeatureMatrix wide[] = {FeatureMatrix(2, 2, 0.0f)};
  CHECK_THROWS_AS(quantization_error(wide, cb), DimensionMismatch);
}

TEST_CASE("scaling frames and centroids scales squared distances by c^2") {
  const double c = 4.0;  // power of two, so scaled floats stay exact
  auto frames = testing::random_matrix(200, 5, 13);
  auto cb = train(frames, 6, TrainConfig{}, 1);
  FeatureMatrix scaled = frames;
  for (std::size_t t = 0; t < scaled.n_frames(); ++t)
    for (auto &v : scaled.row(t)) v = static_cast<float>(v * c);
  std::vector<double> sc = cb.centroids();
  for (auto &v : sc) v *= c;
  Codebook scb(cb.cluster_size(), cb.dim(), sc);
  FeatureMatrix a[] = {frames}, b[] = {scaled};
  CHECK(quantization_error(b, scb) == doctest::Approx(c * c * quantization_error(a, cb)).epsilon(1e-9));
  for (std::size_t t = 0; t < 20; ++t) {
    auto x = assign(frames.row(t), cb), y = assign(scaled.row(t), scb);
    CHECK(x.token_id == y.token_id);
    CHECK(y.squared_distance == doctest::Approx(c * c * x.squared_distance).epsilon(1e-9));
  }
  auto r1 = lloyd_step(frames, cb.centroids(), 6), r2 = lloyd_step(scaled, sc, 6);
  CHECK(r2.inertia == doctest::Approx(c * c * r1.inertia).epsilon(1e-9));
}

TEST_CASE("QE falls as K grows on held-out synthetic speech") {
  auto plan = testing::tiny_plan(21);
  plan.dim = 8;
  plan.categories = 16;
  plan.splits[0].utterances_per_speaker = 40;
  auto corpus = build_corpus(plan);
  FeatureMatrix pooled;
  for (const auto &f : corpus.split("km_T").features) pooled.append_rows(f);
  const auto &held = corpus.split("native_eval").features;
  double prev = 1e300;
  for (std::size_t k : {8, 32, 128}) {
    auto cb = train(pooled, k, TrainConfig{}, 1);
    double qe = quantization_error(held, cb);
    CHECK(qe < prev);
    prev = qe;
  }
}

TEST_CASE("codebook file round-trip") {
  testing::TempDir dir("cb");
  auto cb = train(testing::random_matrix(300, 4, 3), 5, TrainConfig{}, 99);
  cb.train_language = "X";
  cb.ssl_layer = 9;
  save_codebook(cb, dir / "c.dtkc");
  auto back = load_codebook(dir / "c.dtkc");
  CHECK(back == cb);
  CHECK(back.fingerprint() == cb.fingerprint());

  std::ofstream(dir / "bad.dtkc") << "DTKF nonsense";
  CHECK_THROWS_AS(load_codebook(dir / "bad.dtkc"), BadMagicError);
}
