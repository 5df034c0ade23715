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

#include "dtk/metrics.h"

#include <cctype>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dtk/errors.h"
#include "dtk/parallel.h"

namespace dtk {

std::size_t levenshtein(std::span<const Token> a, std::span<const Token> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::uint32_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0u);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<std::uint32_t>(i);
    const Token ai = a[i - 1];
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::uint32_t sub = prev[j - 1] + (ai == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double ter(std::span<const Token> hyp, std::span<const Token> ref) {
  if (ref.empty()) throw InsufficientDataError("TER with an empty reference");
  return static_cast<double>(levenshtein(hyp, ref)) / static_cast<double>(ref.size());
}

std::vector<std::string> normalize_words(const std::string &text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) {
    for (auto &c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.push_back(std::move(w));
  }
  return words;
}

AlignmentCost word_alignment(const std::vector<std::string> &hyp_words,
                             const std::vector<std::string> &ref_words) {
  auto lower = [](std::vector<std::string> ws) {
    for (auto &w : ws)
      for (auto &c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ws;
  };
  return edit_distance(lower(hyp_words), lower(ref_words));
}

double wer(const std::vector<std::string> &hyp_words,
           const std::vector<std::string> &ref_words) {
  if (ref_words.empty()) throw InsufficientDataError("WER with an empty reference");
  return static_cast<double>(word_alignment(hyp_words, ref_words).distance) /
         static_cast<double>(ref_words.size());
}

double wer(const std::string &hyp, const std::string &ref) {
  return wer(normalize_words(hyp), normalize_words(ref));
}

MterReport mter(const TokenCorpus &eval, const TokenCorpus &reference,
                const std::vector<const Manifest *> &manifests, const MterOptions &options) {
  std::unordered_map<std::string, const UtteranceRecord *> records;
  for (const Manifest *m : manifests)
    for (const auto &r : m->records) records.emplace(r.utterance_id, &r);
  auto record_of = [&](const std::string &id) -> const UtteranceRecord & {
    auto it = records.find(id);
    if (it == records.end())
      throw DataError("utterance '" + id + "' is not in any supplied manifest");
    return *it->second;
  };
  auto prepared = [&](const TokenSequence &s) {
    return options.dedup && !s.deduplicated ? deduplicate(s.tokens) : s.tokens;
  };

  // Reference pool per sentence, ordered by utterance id so the reduction
  // order does not depend on corpus order.
  std::map<std::string, std::map<std::string, std::vector<Token>>> pool;
  auto add_ref = [&](const TokenSequence &s, bool require_native) {
    const auto &rec = record_of(s.utterance_id);
    if (require_native && !rec.is_native())
      throw DataError("reference utterance '" + s.utterance_id +
                      "' is not from a native speaker of " + rec.spoken_language);
    pool[rec.sentence_id].emplace(s.utterance_id, prepared(s));
  };
  for (const auto &s : reference.sequences)
    add_ref(s, options.mode == MterMode::kNativeReferences);
  if (options.mode == MterMode::kAllPairs)
    for (const auto &s : eval.sequences) add_ref(s, false);

  std::vector<const TokenSequence *> hyps;
  for (const auto &s : eval.sequences) hyps.push_back(&s);
  std::vector<double> scores(hyps.size(), 0.0);
  std::vector<std::string> missing(hyps.size());
  parallel_for(hyps.size(), options.num_threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto &hyp = *hyps[i];
      const auto &sentence = record_of(hyp.utterance_id).sentence_id;
      auto it = pool.find(sentence);
      const auto tokens = prepared(hyp);
      double sum = 0.0;
      std::size_t count = 0;
      if (it != pool.end()) {
        for (const auto &[ref_id, ref_tokens] : it->second) {
          if (ref_id == hyp.utterance_id) continue;
          sum += ter(tokens, ref_tokens);
          ++count;
        }
      }
      if (count == 0) missing[i] = sentence;
      else scores[i] = sum / static_cast<double>(count);
    }
  });

  std::set<std::string> lacking;
  for (const auto &s : missing)
    if (!s.empty()) lacking.insert(s);
  if (!lacking.empty()) {
    std::string list;
    for (const auto &s : lacking) list += (list.empty() ? "" : ", ") + s;
    throw InsufficientDataError("no reference utterances for sentence(s): " + list);
  }

  MterReport report;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    report.per_utterance[hyps[i]->utterance_id] = scores[i];
  double sum = 0.0;
  for (const auto &[id, v] : report.per_utterance) sum += v;
  if (!report.per_utterance.empty())
    report.corpus_mter = sum / static_cast<double>(report.per_utterance.size());
  return report;
}

}  // namespace dtk
