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

#include "dtk/recognizer.h"

#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "byte_io.h"
#include "dtk/errors.h"
#include "dtk/metrics.h"
#include "dtk/parallel.h"
#include "json.hpp"

namespace dtk {

TemplateIndex build_template_index(const std::vector<const TokenCorpus *> &corpora,
                                   const Manifest &manifest) {
  TemplateIndex index;
  bool first = true;
  for (const TokenCorpus *corpus : corpora) {
    if (first) index.codebook_fingerprint = corpus->codebook_fingerprint;
    first = false;
    if (corpus->codebook_fingerprint != index.codebook_fingerprint)
      throw DataError("template corpora were tokenized with different codebooks (" +
                      index.codebook_fingerprint + " vs " + corpus->codebook_fingerprint + ")");
    for (const auto &seq : corpus->sequences) {
      if (seq.codebook_fingerprint != index.codebook_fingerprint)
        throw DataError(seq.utterance_id + ": codebook fingerprint differs from the index");
      const UtteranceRecord *rec = manifest.find(seq.utterance_id);
      if (rec == nullptr)
        throw DataError("template utterance '" + seq.utterance_id + "' missing from manifest");
      index.entries.push_back({seq.utterance_id, rec->sentence_id, rec->transcript,
                               seq.tokens});
    }
  }
  if (index.entries.empty()) throw InsufficientDataError("template index would be empty");
  return index;
}

TemplateIndex build_template_index(const TokenCorpus &corpus, const Manifest &manifest) {
  return build_template_index(std::vector<const TokenCorpus *>{&corpus}, manifest);
}

void save_template_index(const TemplateIndex &index, const std::filesystem::path &path) {
  std::string text = nlohmann::json{{"codebook_fingerprint", index.codebook_fingerprint}}.dump() + "\n";
  for (const auto &e : index.entries) {
    nlohmann::ordered_json j;
    j["utterance_id"] = e.utterance_id;
    j["sentence_id"] = e.sentence_id;
    j["transcript"] = e.transcript;
    j["tokens"] = e.tokens;
    text += j.dump() + "\n";
  }
  internal::write_file_text(path, text);
}

TemplateIndex load_template_index(const std::filesystem::path &path) {
  std::istringstream in(internal::read_file_text(path));
  TemplateIndex index;
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      if (line_no == 1) {
        index.codebook_fingerprint = j.at("codebook_fingerprint").get<std::string>();
        continue;
      }
      index.entries.push_back({j.at("utterance_id").get<std::string>(),
                               j.at("sentence_id").get<std::string>(),
                               j.at("transcript").get<std::vector<std::string>>(),
                               j.at("tokens").get<std::vector<Token>>()});
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path.string(), line_no, e.what());
  }
  if (index.entries.empty()) throw InsufficientDataError(path.string() + ": empty template index");
  return index;
}

Recognition recognize(const TokenSequence &tokens, const TemplateIndex &index,
                      const std::string &exclude_utterance) {
  if (tokens.codebook_fingerprint != index.codebook_fingerprint)
    throw DataError(tokens.utterance_id + ": tokenized with codebook " +
                    tokens.codebook_fingerprint + ", index uses " + index.codebook_fingerprint);
  const Template *best = nullptr;
  double best_score = std::numeric_limits<double>::infinity();
  for (const auto &e : index.entries) {
    if (!exclude_utterance.empty() && e.utterance_id == exclude_utterance) continue;
    const std::size_t longest = std::max(tokens.tokens.size(), e.tokens.size());
    const double score =
        longest == 0 ? 0.0
                     : static_cast<double>(levenshtein(tokens.tokens, e.tokens)) /
                           static_cast<double>(longest);
    if (score < best_score || (score == best_score && e.sentence_id < best->sentence_id)) {
      best = &e;
      best_score = score;
    }
  }
  if (best == nullptr)
    throw InsufficientDataError("no template left after excluding '" + exclude_utterance + "'");
  return {best->sentence_id, best->transcript, best_score};
}

EvaluationResult evaluate(const TokenCorpus &eval, const Manifest &manifest,
                          const TemplateIndex &index, const EvaluateOptions &options) {
  if (eval.sequences.empty()) throw InsufficientDataError("empty evaluation set");
  if (eval.codebook_fingerprint != index.codebook_fingerprint)
    throw DataError("evaluation corpus and template index use different codebooks");
  std::unordered_map<std::string, const UtteranceRecord *> records;
  for (const auto &r : manifest.records) records.emplace(r.utterance_id, &r);

  EvaluationResult result;
  result.utterances.resize(eval.sequences.size());
  parallel_for(eval.sequences.size(), options.num_threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto &seq = eval.sequences[i];
      auto it = records.find(seq.utterance_id);
      if (it == records.end())
        throw DataError("eval utterance '" + seq.utterance_id + "' missing from manifest");
      const UtteranceRecord &rec = *it->second;
      Recognition hyp =
          recognize(seq, index, options.leave_one_out ? seq.utterance_id : std::string());
      UtteranceResult &u = result.utterances[i];
      u.utterance_id = seq.utterance_id;
      u.speaker_id = rec.speaker_id;
      u.reference_sentence = rec.sentence_id;
      u.predicted_sentence = hyp.sentence_id;
      u.score = hyp.score;
      u.hypothesis = hyp.transcript;
      u.reference_words = rec.transcript.size();
      if (u.reference_words == 0)
        throw InsufficientDataError(seq.utterance_id + ": empty reference transcript");
      u.word_errors = word_alignment(hyp.transcript, rec.transcript).distance;
      u.correct = hyp.sentence_id == rec.sentence_id;
    }
  });

  std::size_t errors = 0, words = 0, correct = 0;
  for (const auto &u : result.utterances) {
    errors += u.word_errors;
    words += u.reference_words;
    correct += u.correct ? 1 : 0;
  }
  result.wer = static_cast<double>(errors) / static_cast<double>(words);
  result.sentence_accuracy =
      static_cast<double>(correct) / static_cast<double>(result.utterances.size());
  return result;
}

std::string format_recognition_output(const EvaluationResult &result) {
  std::string out;
  char score[32];
  for (const auto &u : result.utterances) {
    std::snprintf(score, sizeof(score), "%.6f", u.score);
    out += u.utterance_id + "\t" + u.predicted_sentence + "\t" + score + "\t";
    for (std::size_t i = 0; i < u.hypothesis.size(); ++i) out += (i ? " " : "") + u.hypothesis[i];
    out += "\n";
  }
  return out;
}

}  // namespace dtk
