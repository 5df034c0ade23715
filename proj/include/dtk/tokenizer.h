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

#ifndef DTK_TOKENIZER_H_
#define DTK_TOKENIZER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dtk/feature_store.h"
#include "dtk/kmeans.h"

namespace dtk {

using Token = std::uint32_t;

struct TokenSequence {
  std::string utterance_id;
  std::vector<Token> tokens;
  bool deduplicated = false;
  std::string codebook_fingerprint;

  bool operator==(const TokenSequence &) const = default;
};

TokenSequence tokenize(const FeatureMatrix &matrix, const Codebook &codebook,
                       int num_threads = 1);

// Collapses runs of equal tokens. Idempotent.
TokenSequence deduplicate(const TokenSequence &seq);
std::vector<Token> deduplicate(const std::vector<Token> &tokens);

// A tokenized corpus. All sequences share one codebook and one dedup state.
//
// File format (.tok): a header line
//   #dtk-tokens codebook=<fingerprint> deduplicated=<0|1>
// then one line per utterance: <utterance_id> TAB <space-separated ids>.
struct TokenCorpus {
  std::string codebook_fingerprint;
  bool deduplicated = false;
  std::vector<TokenSequence> sequences;

  const TokenSequence *find(const std::string &utterance_id) const;
  bool operator==(const TokenCorpus &) const = default;
};

void save_token_corpus(const TokenCorpus &corpus, const std::filesystem::path &path);
TokenCorpus load_token_corpus(const std::filesystem::path &path);
std::string format_token_corpus(const TokenCorpus &corpus);
TokenCorpus parse_token_corpus(const std::string &text, const std::string &source = "<memory>");

struct TokenizeFailure {
  std::string utterance_id;
  std::string message;
};

struct TokenizeOutcome {
  TokenCorpus corpus;
  std::vector<TokenizeFailure> failures;
  bool ok() const { return failures.empty(); }
};

// Reads each record's feature file; a bad utterance is reported and skipped.
TokenizeOutcome tokenize_corpus(const Manifest &manifest, const Codebook &codebook,
                                bool dedup, int num_threads = 1);

// Same, over matrices already in memory (parallel to manifest.records).
TokenizeOutcome tokenize_corpus(const Manifest &manifest,
                                const std::vector<FeatureMatrix> &features,
                                const Codebook &codebook, bool dedup, int num_threads = 1);

}  // namespace dtk

#endif  // DTK_TOKENIZER_H_
