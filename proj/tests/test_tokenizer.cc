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

#include <fstream>
#include <set>

#include "dtk/errors.h"
#include "dtk/tokenizer.h"
#include "oracles.h"
#include "test_util.h"

using namespace dtk;

namespace {

Codebook line_codebook(std::size_t k) {
  std::vector<double> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = 10.0 * static_cast<double>(i);
  return Codebook(k, 1, c);
}

// Reference dedup: keep a token iff it differs from its predecessor.
std::vector<Token> one_pass_dedup(const std::vector<Token> &in) {
  std::vector<Token> out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (i == 0 || in[i] != in[i - 1]) out.push_back(in[i]);
  return out;
}

std::vector<Token> random_tokens(dtk::Rng &rng, std::size_t max_len, Token alphabet) {
  std::vector<Token> t(static_cast<std::size_t>(rng.uniform_int(0, max_len)));
  for (auto &v : t) v = static_cast<Token>(rng.uniform_int(0, alphabet - 1));
  return t;
}

// Manifest + features written under dir; returns the manifest.
Manifest write_small_corpus(const std::filesystem::path &dir, std::size_t n, std::size_t dim,
                            std::uint64_t seed) {
  Manifest m;
  m.base_dir = dir;
  for (std::size_t i = 0; i < n; ++i) {
    UtteranceRecord r;
    r.utterance_id = "utt" + std::to_string(i);
    r.speaker_id = "spk";
    r.native_language = r.spoken_language = "T";
    r.sentence_id = "S" + std::to_string(i);
    r.transcript = {"w"};
    r.feature_path = r.utterance_id + ".dtkf";
    write_features(testing::random_matrix(5 + i, dim, seed + i), dir / r.feature_path);
    m.records.push_back(r);
  }
  save_manifest(m, dir / "m.jsonl");
  return load_manifest(dir / "m.jsonl");
}

}  // namespace

TEST_CASE("tokenize examples") {
  auto cb = line_codebook(4);
  auto one = tokenize(testing::column({30.0f}), cb);
  CHECK(one.tokens == std::vector<Token>{3});
  CHECK_FALSE(one.deduplicated);
  CHECK(one.codebook_fingerprint == cb.fingerprint());

  auto alt = tokenize(testing::column({0.0f, 10.0f, 0.0f, 10.0f, 0.0f}), cb);
  CHECK(alt.tokens == std::vector<Token>{0, 1, 0, 1, 0});

  CHECK_THROWS_AS(tokenize(FeatureMatrix(2, 3, 0.0f), cb), DimensionMismatch);
}

TEST_CASE("tokenize agrees with an exhaustive scan, serial or parallel") {
  auto data = testing::random_matrix(64, 5, 3);
  Codebook cb(64, 5, std::vector<double>(data.data().begin(), data.data().end()));
  auto m = testing::random_matrix(500, 5, 4);
  auto serial = tokenize(m, cb, 1);
  auto parallel = tokenize(m, cb, 4);
  CHECK(serial == parallel);
  REQUIRE(serial.tokens.size() == 500);
  for (std::size_t t = 0; t < 500; ++t) {
    auto r = m.row(t);
    auto [id, d] = oracle::nearest_centroid({r.begin(), r.end()}, cb.centroids(), 64);
    CHECK(serial.tokens[t] == id);
  }
}

TEST_CASE("deduplicate examples") {
  TokenSequence s{"u", {5, 5, 3, 3, 3, 5}, false, "fp"};
  auto d = deduplicate(s);
  CHECK(d.tokens == std::vector<Token>{5, 3, 5});
  CHECK(d.deduplicated);
  CHECK(d.utterance_id == "u");
  CHECK(deduplicate(std::vector<Token>{7}) == std::vector<Token>{7});
  CHECK(deduplicate(std::vector<Token>{}).empty());
}

TEST_CASE("deduplicate properties") {
  dtk::Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    auto t = random_tokens(rng, 30, 4);
    auto d = deduplicate(t);
    CHECK(d == one_pass_dedup(t));
    CHECK(deduplicate(d) == d);
    CHECK(d.size() <= t.size());
    bool has_adjacent_pair = false;
    for (std::size_t j = 1; j < t.size(); ++j) has_adjacent_pair |= t[j] == t[j - 1];
    CHECK((d.size() == t.size()) == !has_adjacent_pair);
    CHECK(std::set<Token>(d.begin(), d.end()) == std::set<Token>(t.begin(), t.end()));
    for (std::size_t j = 1; j < d.size(); ++j) CHECK(d[j] != d[j - 1]);
  }
}

TEST_CASE("token corpus text format") {
  TokenCorpus c;
  c.codebook_fingerprint = "abc123";
  c.deduplicated = true;
  c.sequences = {{"u1", {1, 2, 3}, true, "abc123"}, {"u2", {}, true, "abc123"}};
  auto text = format_token_corpus(c);
  CHECK(text == "#dtk-tokens codebook=abc123 deduplicated=1\nu1\t1 2 3\nu2\t\n");
  CHECK(parse_token_corpus(text) == c);

  CHECK_THROWS_AS(parse_token_corpus("u1\t1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_token_corpus("#dtk-tokens codebook=a deduplicated=0\nu1 1 2\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_token_corpus("#dtk-tokens codebook=a deduplicated=0\nu1\t1 x\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_token_corpus("#dtk-tokens codebook=a deduplicated=0\nu\t1\nu\t2\n"),
                  DuplicateIdError);
}

TEST_CASE("tokenize_corpus") {
  testing::TempDir dir("tokc");
  auto cb = train(testing::random_matrix(400, 3, 1), 8, TrainConfig{}, 2);

  SUBCASE("empty manifest") {
    Manifest empty;
    auto out = tokenize_corpus(empty, cb, true);
    CHECK(out.ok());
    CHECK(out.corpus.sequences.empty());
    CHECK(out.corpus.codebook_fingerprint == cb.fingerprint());
  }
  SUBCASE("order, dedup flag and determinism") {
    auto m = write_small_corpus(dir.path(), 3, 3, 10);
    auto a = tokenize_corpus(m, cb, true);
    REQUIRE(a.ok());
    REQUIRE(a.corpus.sequences.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.corpus.sequences[i].utterance_id == m.records[i].utterance_id);
      CHECK(a.corpus.sequences[i].deduplicated);
      auto raw = tokenize(read_features(m.resolve(m.records[i])), cb);
      CHECK(a.corpus.sequences[i].tokens == deduplicate(raw.tokens));
    }
    save_token_corpus(a.corpus, dir / "a.tok");
    save_token_corpus(tokenize_corpus(m, cb, true, 3).corpus, dir / "b.tok");
    std::ifstream fa(dir / "a.tok"), fb(dir / "b.tok");
    std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa == sb);
    CHECK(load_token_corpus(dir / "a.tok") == a.corpus);

    auto raw = tokenize_corpus(m, cb, false);
    CHECK_FALSE(raw.corpus.deduplicated);
    CHECK(raw.corpus.sequences[0].tokens.size() == 5);
  }
  SUBCASE("a bad utterance is reported and the rest continue") {
    auto m = write_small_corpus(dir.path(), 3, 3, 20);
    write_features(testing::random_matrix(4, 2, 1), m.resolve(m.records[1]));
    auto out = tokenize_corpus(m, cb, true);
    CHECK_FALSE(out.ok());
    REQUIRE(out.failures.size() == 1);
    CHECK(out.failures[0].utterance_id == "utt1");
    CHECK(out.corpus.sequences.size() == 2);
    CHECK(out.corpus.sequences[1].utterance_id == "utt2");
  }
}
