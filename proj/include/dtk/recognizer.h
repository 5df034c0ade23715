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

#ifndef DTK_RECOGNIZER_H_
#define DTK_RECOGNIZER_H_

// Nearest-template recognizer over token sequences. Stands in for a trained
// ASR model: both consume only token sequences, so the codebook is the one
// variable under test.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtk/feature_store.h"
#include "dtk/tokenizer.h"

namespace dtk {

struct Template {
  std::string utterance_id;
  std::string sentence_id;
  std::vector<std::string> transcript;
  std::vector<Token> tokens;
};

struct TemplateIndex {
  std::string codebook_fingerprint;
  std::vector<Template> entries;
};

// One entry per sequence, in corpus order. Transcripts and sentence ids come
// from the manifest.
TemplateIndex build_template_index(const TokenCorpus &corpus, const Manifest &manifest);
TemplateIndex build_template_index(const std::vector<const TokenCorpus *> &corpora,
                                   const Manifest &manifest);

// JSON Lines: a header object {"codebook_fingerprint": ...}, then one object
// per template.
void save_template_index(const TemplateIndex &index, const std::filesystem::path &path);
TemplateIndex load_template_index(const std::filesystem::path &path);

struct Recognition {
  std::string sentence_id;
  std::vector<std::string> transcript;
  // edit distance / max(len(test), len(template)), in [0, 1].
  double score = 0.0;
};

// `exclude_utterance` never matches (leave-one-out).
Recognition recognize(const TokenSequence &tokens, const TemplateIndex &index,
                      const std::string &exclude_utterance = "");

struct UtteranceResult {
  std::string utterance_id;
  std::string speaker_id;
  std::string reference_sentence;
  std::string predicted_sentence;
  double score = 0.0;
  std::vector<std::string> hypothesis;
  std::size_t word_errors = 0;
  std::size_t reference_words = 0;
  bool correct = false;
};

struct EvaluationResult {
  std::vector<UtteranceResult> utterances;
  // Total word errors / total reference words.
  double wer = 0.0;
  double sentence_accuracy = 0.0;
};

struct EvaluateOptions {
  bool leave_one_out = true;
  int num_threads = 1;
};

EvaluationResult evaluate(const TokenCorpus &eval, const Manifest &manifest,
                          const TemplateIndex &index, const EvaluateOptions &options = {});

// TSV lines: utterance_id, predicted sentence_id, score, predicted transcript.
std::string format_recognition_output(const EvaluationResult &result);

}  // namespace dtk

#endif  // DTK_RECOGNIZER_H_
