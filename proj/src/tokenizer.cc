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

#include "dtk/tokenizer.h"

#include <charconv>
#include <sstream>
#include <unordered_set>

#include "byte_io.h"
#include "dtk/errors.h"
#include "dtk/parallel.h"

namespace dtk {

TokenSequence tokenize(const FeatureMatrix &matrix, const Codebook &codebook,
                       int num_threads) {
  if (matrix.dim() != codebook.dim())
    throw DimensionMismatch("feature dim " + std::to_string(matrix.dim()) +
                            " != codebook dim " + std::to_string(codebook.dim()));
  TokenSequence seq;
  seq.codebook_fingerprint = codebook.fingerprint();
  seq.tokens.resize(matrix.n_frames());
  parallel_for(matrix.n_frames(), num_threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) seq.tokens[t] = assign(matrix.row(t), codebook).token_id;
  });
  return seq;
}

std::vector<Token> deduplicate(const std::vector<Token> &tokens) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (Token t : tokens)
    if (out.empty() || out.back() != t) out.push_back(t);
  return out;
}

TokenSequence deduplicate(const TokenSequence &seq) {
  TokenSequence out = seq;
  out.tokens = deduplicate(seq.tokens);
  out.deduplicated = true;
  return out;
}

const TokenSequence *TokenCorpus::find(const std::string &utterance_id) const {
  for (const auto &s : sequences)
    if (s.utterance_id == utterance_id) return &s;
  return nullptr;
}

std::string format_token_corpus(const TokenCorpus &corpus) {
  std::string out = "#dtk-tokens codebook=" + corpus.codebook_fingerprint +
                    " deduplicated=" + (corpus.deduplicated ? "1" : "0") + "\n";
  for (const auto &s : corpus.sequences) {
    out += s.utterance_id;
    out += '\t';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(s.tokens[i]);
    }
    out += '\n';
  }
  return out;
}

TokenCorpus parse_token_corpus(const std::string &text, const std::string &source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  TokenCorpus corpus;
  bool have_header = false;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      std::istringstream h(line);
      std::string tag, cb, dd;
      h >> tag >> cb >> dd;
      if (tag != "#dtk-tokens" || cb.rfind("codebook=", 0) != 0 ||
          (dd != "deduplicated=0" && dd != "deduplicated=1"))
        throw ParseError(source, line_no, "missing #dtk-tokens header");
      corpus.codebook_fingerprint = cb.substr(9);
      corpus.deduplicated = dd.back() == '1';
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ParseError(source, line_no, "expected <utterance_id>\\t<tokens>");
    TokenSequence seq;
    seq.utterance_id = line.substr(0, tab);
    seq.deduplicated = corpus.deduplicated;
    seq.codebook_fingerprint = corpus.codebook_fingerprint;
    const char *p = line.data() + tab + 1, *end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      Token v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw ParseError(source, line_no, "bad token id");
      seq.tokens.push_back(v);
      p = next;
    }
    if (!seen.insert(seq.utterance_id).second)
      throw DuplicateIdError(source + ":" + std::to_string(line_no) +
                             ": duplicate utterance_id '" + seq.utterance_id + "'");
    corpus.sequences.push_back(std::move(seq));
  }
  if (!have_header) throw ParseError(source, line_no, "empty token corpus file");
  return corpus;
}

void save_token_corpus(const TokenCorpus &corpus, const std::filesystem::path &path) {
  internal::write_file_text(path, format_token_corpus(corpus));
}

TokenCorpus load_token_corpus(const std::filesystem::path &path) {
  return parse_token_corpus(internal::read_file_text(path), path.string());
}

namespace {

template <typename LoadFn>
TokenizeOutcome tokenize_records(const Manifest &manifest, const Codebook &codebook,
                                 bool dedup, int num_threads, LoadFn &&load) {
  TokenizeOutcome out;
  out.corpus.codebook_fingerprint = codebook.fingerprint();
  out.corpus.deduplicated = dedup;
  const std::size_t n = manifest.records.size();
  std::vector<TokenSequence> seqs(n);
  std::vector<std::string> errors(n);
  // Utterance-level parallelism; each slot is written by one worker only.
  parallel_for(n, num_threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        auto seq = tokenize(load(i), codebook);
        seq.utterance_id = manifest.records[i].utterance_id;
        seqs[i] = dedup ? deduplicate(seq) : std::move(seq);
      } catch (const std::exception &ex) {
        errors[i] = ex.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i].empty())
      out.corpus.sequences.push_back(std::move(seqs[i]));
    else
      out.failures.push_back({manifest.records[i].utterance_id, errors[i]});
  }
  return out;
}

}  // namespace

TokenizeOutcome tokenize_corpus(const Manifest &manifest, const Codebook &codebook,
                                bool dedup, int num_threads) {
  return tokenize_records(manifest, codebook, dedup, num_threads, [&](std::size_t i) {
    return read_features(manifest.resolve(manifest.records[i]));
  });
}

TokenizeOutcome tokenize_corpus(const Manifest &manifest,
                                const std::vector<FeatureMatrix> &features,
                                const Codebook &codebook, bool dedup, int num_threads) {
  if (features.size() != manifest.records.size())
    throw DimensionMismatch("feature list does not match manifest size");
  return tokenize_records(manifest, codebook, dedup, num_threads,
                          [&](std::size_t i) -> const FeatureMatrix & { return features[i]; });
}

}  // namespace dtk
