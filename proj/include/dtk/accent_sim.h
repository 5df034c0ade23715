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

#ifndef DTK_ACCENT_SIM_H_
#define DTK_ACCENT_SIM_H_

// Synthetic speech-feature generator. Each language is a set of isotropic
// Gaussian phone categories with a Markov chain over them. An accented
// speaker reads target-language sentences but, per phone and with
// probability alpha, produces the nearest category of their own language
// instead (perceptual assimilation).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dtk/feature_store.h"

namespace dtk {

struct PhoneCategory {
  std::vector<double> mean;
  double spread = 1.0;
};

struct LanguageInventory {
  std::string language_tag;
  std::vector<PhoneCategory> categories;
  // Row-stochastic C x C.
  std::vector<std::vector<double>> transitions;
  std::vector<std::string> labels;

  std::size_t size() const { return categories.size(); }
  std::size_t dim() const { return categories.empty() ? 0 : categories[0].mean.size(); }
  // Throws RangeError when an invariant is broken.
  void validate() const;
};

LanguageInventory make_inventory(const std::string &language_tag, std::size_t num_categories,
                                 std::size_t dim, double separation, std::uint64_t seed,
                                 double spread = 1.0);

// A related language: same chain and labels, every mean moved by
// N(0, (jitter * spread)^2) per coordinate.
LanguageInventory perturb_inventory(const LanguageInventory &base, const std::string &tag,
                                    double jitter, std::uint64_t seed);

double min_pairwise_distance(const LanguageInventory &inventory);

// For each target category, the nearest category of `native` (ties to the
// lowest index).
std::vector<std::size_t> assimilation_map(const LanguageInventory &target,
                                          const LanguageInventory &native);

struct SimulatedSentence {
  std::string sentence_id;
  std::vector<std::size_t> categories;
  std::vector<std::string> transcript;
};

struct LengthRange {
  std::size_t min = 1;
  std::size_t max = 1;
};

std::vector<SimulatedSentence> sample_sentences(const LanguageInventory &inventory,
                                                std::size_t n_sentences, LengthRange lengths,
                                                std::uint64_t seed,
                                                const std::string &id_prefix = "");

struct AccentSpec {
  std::string speaker_native;
  std::string target;
  double strength = 0.0;  // alpha
  LengthRange frames_per_phone{2, 5};
  std::uint64_t seed = 0;
};

struct SynthesizedUtterance {
  FeatureMatrix features;
  UtteranceRecord record;
  // Per phone: the inventory the emission came from and its category.
  std::vector<bool> assimilated;
  std::vector<std::size_t> emission_categories;
};

SynthesizedUtterance synthesize_utterance(const SimulatedSentence &sentence,
                                          const LanguageInventory &target,
                                          const LanguageInventory &speaker,
                                          const AccentSpec &accent,
                                          const std::string &speaker_id,
                                          const std::string &utterance_id,
                                          std::uint64_t utterance_seed);

// ---------------------------------------------------------------------------
// Corpus plans

enum class SplitRole { kTokenizerTrain, kAsrTrain, kNativeEval, kAccentedEval };

std::string to_string(SplitRole role);
SplitRole split_role_from_string(const std::string &s);

struct LanguagePlan {
  std::string tag;
  // Set for a language derived from another one by perturbation.
  std::optional<std::string> perturb_of;
  double jitter = 0.0;
};

struct SplitPlan {
  std::string name;
  SplitRole role = SplitRole::kAsrTrain;
  // Tokenizer-train: the language spoken. Accented eval: speakers' native
  // language. Ignored otherwise.
  std::string language;
  std::size_t speakers = 1;
  // Tokenizer-train only: sentences per speaker, sampled from `language`.
  std::size_t utterances_per_speaker = 0;
  // Accented eval: per-speaker alpha drawn uniformly from this range.
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  std::string speaker_prefix;  // defaults to name
};

struct CorpusPlan {
  std::string name = "synthetic";
  std::uint64_t seed = 1;
  std::size_t dim = 16;
  std::size_t categories = 32;
  double spread = 1.0;
  double separation = 4.0;
  LengthRange frames_per_phone{2, 5};
  std::string target_language = "T";
  std::vector<LanguagePlan> languages;
  std::size_t sentence_count = 30;
  LengthRange sentence_length{5, 10};
  std::vector<SplitPlan> splits;
};

// Throws DataError on unknown keys or invalid values.
CorpusPlan corpus_plan_from_json(const std::string &json_text,
                                 const std::string &source = "<plan>");
std::string corpus_plan_to_json(const CorpusPlan &plan);

// A small but complete ISIB plan: languages T, X and a perturbation Z of X;
// tokenizer-training splits for each; template, native-eval and
// accented-eval splits for T.
CorpusPlan default_isib_plan(std::uint64_t seed = 1);

struct CorpusSplit {
  SplitPlan plan;
  Manifest manifest;
  std::vector<FeatureMatrix> features;  // parallel to manifest.records
};

struct SyntheticCorpus {
  CorpusPlan plan;
  std::map<std::string, LanguageInventory> inventories;
  std::vector<SimulatedSentence> target_sentences;
  std::vector<CorpusSplit> splits;

  const CorpusSplit &split(const std::string &name) const;
  const CorpusSplit *find_role(SplitRole role, const std::string &language = "") const;
};

SyntheticCorpus build_corpus(const CorpusPlan &plan, int num_threads = 1);

// Writes <dir>/<split>.jsonl manifests, <dir>/feats/<split>/<utt>.dtkf and
// <dir>/corpus.json (the plan plus split roles).
void write_corpus(const SyntheticCorpus &corpus, const std::filesystem::path &dir);

// Inverse of write_corpus. Inventories are not persisted and come back empty.
SyntheticCorpus read_corpus(const std::filesystem::path &dir);

}  // namespace dtk

#endif  // DTK_ACCENT_SIM_H_
