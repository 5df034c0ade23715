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
#include <random>

#include "dtk/accent_sim.h"
#include "dtk/errors.h"
#include "dtk/kmeans.h"
#include "dtk/metrics.h"
#include "dtk/random.h"
#include "dtk/recognizer.h"
#include "oracles.h"
#include "test_util.h"

using namespace dtk;

namespace {

const std::string kFp = "fp0";

Template tmpl(const std::string &utt, const std::string &sentence, std::vector<Token> tokens) {
  return {utt, sentence, {"word_" + sentence}, std::move(tokens)};
}

TokenSequence query(std::vector<Token> t, const std::string &id = "q") {
  return {id, std::move(t), true, kFp};
}

std::vector<Token> random_tokens(Rng &rng, std::size_t lo, std::size_t hi, Token alphabet) {
  std::vector<Token> t(static_cast<std::size_t>(rng.uniform_int(lo, hi)));
  for (auto &v : t) v = static_cast<Token>(rng.uniform_int(0, alphabet - 1));
  return t;
}

// Full scan with its own scoring; returns the winning sentence id.
std::string scan_oracle(const std::vector<Token> &q, const TemplateIndex &index) {
  std::string best;
  double best_score = 2.0;
  for (const auto &e : index.entries) {
    double longest = static_cast<double>(std::max(q.size(), e.tokens.size()));
    double s = longest == 0 ? 0.0 : oracle::recursive_edit(q, e.tokens) / longest;
    if (s < best_score || (s == best_score && e.sentence_id < best)) {
      best = e.sentence_id;
      best_score = s;
    }
  }
  return best;
}

Manifest manifest_for(const std::vector<std::pair<std::string, std::string>> &utt_sentence) {
  Manifest m;
  for (const auto &[u, s] : utt_sentence) {
    UtteranceRecord r;
    r.utterance_id = u;
    r.speaker_id = u.substr(0, 2);
    r.native_language = r.spoken_language = "T";
    r.sentence_id = s;
    r.transcript = {"word_" + s};
    r.feature_path = u + ".dtkf";
    m.records.push_back(r);
  }
  return m;
}

}  // namespace

TEST_CASE("recognize examples") {
  TemplateIndex index{kFp, {tmpl("a", "S1", {1, 2, 3}), tmpl("b", "S2", {4, 5, 6, 7})}};
  auto r = recognize(query({4, 5, 6, 7}), index);
  CHECK(r.sentence_id == "S2");
  CHECK(r.score == 0.0);
  CHECK(r.transcript == std::vector<std::string>{"word_S2"});

  auto near = recognize(query({1, 2, 9}), index);
  CHECK(near.sentence_id == "S1");
  CHECK(near.score == doctest::Approx(1.0 / 3.0));

  TemplateIndex one{kFp, {tmpl("a", "S1", {1})}};
  CHECK(recognize(query({7, 7, 7, 7}), one).sentence_id == "S1");
  CHECK(recognize(query({7, 7, 7, 7}), one).score == 1.0);
  CHECK(recognize(query({}), one).score == 1.0);

  SUBCASE("ties go to the smallest sentence id in any order") {
    TemplateIndex tie{kFp, {tmpl("a", "S9", {1, 2}), tmpl("b", "S3", {1, 3}), tmpl("c", "S5", {2, 2})}};
    CHECK(recognize(query({1, 4}), tie).sentence_id == "S3");
    std::reverse(tie.entries.begin(), tie.entries.end());
    CHECK(recognize(query({1, 4}), tie).sentence_id == "S3");
  }
  SUBCASE("leave one out") {
    CHECK(recognize(query({4, 5, 6, 7}, "b"), index, "b").sentence_id == "S1");
    CHECK_THROWS_AS(recognize(query({1}, "a"), one, "a"), InsufficientDataError);
  }
  SUBCASE("fingerprint mismatch") {
    TokenSequence other{"q", {1}, true, "other"};
    CHECK_THROWS_AS(recognize(other, index), DataError);
  }
}

TEST_CASE("recognize agrees with a full-scan oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    TemplateIndex index{kFp, {}};
    for (int t = 0; t < 50; ++t)
      index.entries.push_back(tmpl("u" + std::to_string(t), "S" + std::to_string(t % 17),
                                   random_tokens(rng, 1, 6, 4)));
    auto q = random_tokens(rng, 0, 6, 4);
    auto r = recognize(query(q), index);
    CHECK(r.sentence_id == scan_oracle(q, index));
    CHECK(r.score >= 0.0);
    CHECK(r.score <= 1.0);

    // Consistent relabeling and reordering change nothing.
    std::vector<Token> perm{3, 0, 2, 1};
    auto relabel = [&](std::vector<Token> v) {
      for (auto &x : v) x = perm[x] + 100;
      return v;
    };
    TemplateIndex mapped = index;
    for (auto &e : mapped.entries) e.tokens = relabel(e.tokens);
    std::shuffle(mapped.entries.begin(), mapped.entries.end(), std::mt19937(trial));
    auto m = recognize(query(relabel(q)), mapped);
    CHECK(m.sentence_id == r.sentence_id);
    CHECK(m.score == r.score);
  }
}

TEST_CASE("build_template_index") {
  auto m = manifest_for({{"a1", "S1"}, {"a2", "S2"}, {"b1", "S1"}});
  TokenCorpus c{kFp, true, {query({1, 2}, "a1"), query({3}, "a2")}};
  auto idx = build_template_index(c, m);
  REQUIRE(idx.entries.size() == 2);
  CHECK(idx.codebook_fingerprint == kFp);
  CHECK(idx.entries[0].utterance_id == "a1");
  CHECK(idx.entries[1].sentence_id == "S2");
  CHECK(idx.entries[1].transcript == std::vector<std::string>{"word_S2"});

  TokenCorpus single{kFp, true, {query({5}, "b1")}};
  CHECK(build_template_index(single, m).entries.size() == 1);
  CHECK(build_template_index({&c, &single}, m).entries.size() == 3);

  TokenCorpus other{"fp1", true, {query({5}, "b1")}};
  other.sequences[0].codebook_fingerprint = "fp1";
  CHECK_THROWS_AS(build_template_index({&c, &other}, m), DataError);
  TokenCorpus empty{kFp, true, {}};
  CHECK_THROWS_AS(build_template_index(empty, m), InsufficientDataError);
  TokenCorpus unknown{kFp, true, {query({5}, "zz")}};
  CHECK_THROWS_AS(build_template_index(unknown, m), DataError);

  SUBCASE("save and load") {
    testing::TempDir dir("idx");
    save_template_index(idx, dir / "i.jsonl");
    auto back = load_template_index(dir / "i.jsonl");
    CHECK(back.codebook_fingerprint == idx.codebook_fingerprint);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].tokens == idx.entries[0].tokens);
    CHECK(back.entries[1].transcript == idx.entries[1].transcript);
    CHECK(back.entries[1].sentence_id == "S2");
  }
}

TEST_CASE("evaluate") {
  auto m = manifest_for({{"a1", "S1"}, {"a2", "S2"}, {"b1", "S1"}, {"b2", "S2"}});
  TokenCorpus train{kFp, true, {query({1, 2, 3}, "a1"), query({7, 8, 9}, "a2")}};
  auto idx = build_template_index(train, m);

  SUBCASE("training set without leave-one-out is perfect") {
    EvaluateOptions o;
    o.leave_one_out = false;
    auto r = evaluate(train, m, idx, o);
    CHECK(r.wer == 0.0);
    CHECK(r.sentence_accuracy == 1.0);
  }
  SUBCASE("leave one out never matches itself") {
    auto r = evaluate(train, m, idx);
    CHECK(r.utterances[0].predicted_sentence == "S2");
    CHECK(r.sentence_accuracy == 0.0);
    CHECK(r.wer == 1.0);
  }
  SUBCASE("pooled counts and output") {
    TokenCorpus ev{kFp, true, {query({1, 2, 4}, "b1"), query({1, 2}, "b2")}};
    auto r = evaluate(ev, m, idx);
    CHECK(r.utterances[0].correct);
    CHECK_FALSE(r.utterances[1].correct);
    CHECK(r.utterances[1].speaker_id == "b2");
    CHECK(r.sentence_accuracy == 0.5);
    CHECK(r.wer == 0.5);
    CHECK(format_recognition_output(r) ==
          "b1\tS1\t0.333333\tword_S1\n"
          "b2\tS1\t0.333333\tword_S1\n");
    EvaluateOptions o;
    o.num_threads = 2;
    auto p = evaluate(ev, m, idx, o);
    CHECK(format_recognition_output(p) == format_recognition_output(r));
  }
  SUBCASE("errors") {
    TokenCorpus empty{kFp, true, {}};
    CHECK_THROWS_AS(evaluate(empty, m, idx), InsufficientDataError);
    TokenCorpus other{"fp1", true, {}};
    other.sequences = {{"b1", {1}, true, "fp1"}};
    CHECK_THROWS_AS(evaluate(other, m, idx), DataError);
    TokenCorpus missing{kFp, true, {query({1}, "zz")}};
    CHECK_THROWS_AS(evaluate(missing, m, idx), DataError);
  }
}

TEST_CASE("native speech is recognized with a matched 128-cluster codebook") {
  auto corpus = build_corpus(default_isib_plan(1));
  const auto &km = corpus.split("km_T");
  FeatureMatrix pooled(0, corpus.plan.dim);
  for (const auto &f : km.features) pooled.append_rows(f);
  auto cb = train(pooled, 128, TrainConfig{}, derive_seed(1, 128));

  auto tokens_of = [&](const CorpusSplit &split) {
    return tokenize_corpus(split.manifest, split.features, cb, true).corpus;
  };
  const auto &asr = *corpus.find_role(SplitRole::kAsrTrain);
  const auto &ne = *corpus.find_role(SplitRole::kNativeEval);
  auto idx = build_template_index(tokens_of(asr), asr.manifest);
  auto r = evaluate(tokens_of(ne), ne.manifest, idx);
  CHECK(r.utterances.size() == 300);
  CHECK(r.sentence_accuracy >= 0.95);
  MESSAGE("native accuracy " << r.sentence_accuracy << ", WER " << r.wer);
}
