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

#ifndef DTK_METRICS_H_
#define DTK_METRICS_H_

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dtk/feature_store.h"
#include "dtk/tokenizer.h"

namespace dtk {

// Result of aligning `a` onto `b`. Insertions are symbols of b missing
// from a; deletions are symbols of a absent in b.
struct AlignmentCost {
  std::size_t distance = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  bool operator==(const AlignmentCost &) const = default;
};

// Unit-cost Levenshtein distance. The S/I/D split comes from one optimal
// alignment; the backtrace prefers the diagonal, then insertion, then
// deletion.
template <typename T>
AlignmentCost edit_distance(std::span<const T> a, std::span<const T> b) {
  const std::size_t n = a.size(), m = b.size();
  const std::size_t w = m + 1;
  std::vector<std::uint32_t> dp((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) dp[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    dp[i * w] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      std::uint32_t diag = dp[(i - 1) * w + j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      std::uint32_t ins = dp[i * w + j - 1] + 1;
      std::uint32_t del = dp[(i - 1) * w + j] + 1;
      dp[i * w + j] = std::min({diag, ins, del});
    }
  }
  AlignmentCost cost;
  cost.distance = dp[n * w + m];
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = dp[i * w + j];
    if (i > 0 && j > 0 &&
        here == dp[(i - 1) * w + j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)) {
      if (a[i - 1] != b[j - 1]) ++cost.substitutions;
      --i;
      --j;
    } else if (j > 0 && here == dp[i * w + j - 1] + 1) {
      ++cost.insertions;
      --j;
    } else {
      ++cost.deletions;
      --i;
    }
  }
  return cost;
}

template <typename T>
AlignmentCost edit_distance(const std::vector<T> &a, const std::vector<T> &b) {
  return edit_distance(std::span<const T>(a), std::span<const T>(b));
}

// Distance only, two-row DP. Same value as edit_distance(a, b).distance.
std::size_t levenshtein(std::span<const Token> a, std::span<const Token> b);

// Token error rate, unclipped. Throws InsufficientDataError on empty ref.
double ter(std::span<const Token> hyp, std::span<const Token> ref);
inline double ter(const TokenSequence &hyp, const TokenSequence &ref) {
  return ter(hyp.tokens, ref.tokens);
}

// Lowercase + whitespace split.
std::vector<std::string> normalize_words(const std::string &text);

// Word-level alignment after lowercasing.
AlignmentCost word_alignment(const std::vector<std::string> &hyp_words,
                             const std::vector<std::string> &ref_words);

double wer(const std::vector<std::string> &hyp_words, const std::vector<std::string> &ref_words);
double wer(const std::string &hyp, const std::string &ref);

enum class MterMode {
  // Per hypothesis: mean TER against every native reference utterance of the
  // same sentence (excluding itself).
  kNativeReferences,
  // References are all same-sentence utterances from both corpora.
  kAllPairs,
};

struct MterOptions {
  MterMode mode = MterMode::kNativeReferences;
  bool dedup = true;
  int num_threads = 1;
};

struct MterReport {
  std::map<std::string, double> per_utterance;
  double corpus_mter = 0.0;
};

// Manifests supply sentence_id and nativeness for every utterance in both
// corpora. Throws InsufficientDataError naming sentences left without a
// reference.
MterReport mter(const TokenCorpus &eval, const TokenCorpus &reference,
                const std::vector<const Manifest *> &manifests, const MterOptions &options = {});

}  // namespace dtk

#endif  // DTK_METRICS_H_
