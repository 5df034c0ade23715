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

#ifndef DTK_EXPERIMENT_H_
#define DTK_EXPERIMENT_H_

// End-to-end codebook comparison: for every (codebook language, K, seed)
// train a codebook on that language's native data only, tokenize the
// template and evaluation splits, and score each evaluation subset with
// the recognizer, QE and MTER.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtk/accent_sim.h"
#include "dtk/kmeans.h"
#include "dtk/metrics.h"
#include "dtk/recognizer.h"

namespace dtk {

struct ReportPaths {
  std::optional<std::filesystem::path> json;
  std::optional<std::filesystem::path> tsv;
  std::optional<std::filesystem::path> table;
};

struct ExperimentConfig {
  // Exactly one of the two corpus sources. With a plan, each seed
  // regenerates the corpus with that seed; a corpus directory is fixed and
  // seeds only vary k-means.
  std::optional<CorpusPlan> corpus_plan;
  std::optional<std::filesystem::path> corpus_dir;

  std::vector<std::string> codebook_languages;
  std::vector<std::size_t> cluster_sizes;
  int ssl_layer = 12;
  std::vector<std::uint64_t> seeds;
  std::size_t worst_speakers = 10;
  bool dedup = true;
  MterMode mter_mode = MterMode::kNativeReferences;
  TrainConfig kmeans;
  ReportPaths report;

  // Throws DataError.
  void validate() const;
};

// Unknown keys are rejected. Relative paths resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const std::string &json_text,
                                             const std::filesystem::path &base_dir = {},
                                             const std::string &source = "<config>");
ExperimentConfig load_experiment_config(const std::filesystem::path &path);

// Default desk-scale ISIB comparison over codebooks {T, X, Z}.
ExperimentConfig default_isib_config(std::size_t num_seeds = 10);

// Utterances of the n speakers with the highest accent_strength (ties by
// speaker_id). Throws InsufficientDataError when n == 0 or fewer than n
// accented speakers exist.
Manifest select_worst_speakers(const Manifest &manifest, std::size_t n);

struct SubsetCell {
  std::string subset;
  // matched / spoken-language / mismatched
  std::string condition;
  std::size_t n_utterances = 0;
  double wer = 0.0;
  double sentence_accuracy = 0.0;
  double qe = 0.0;
  double mter = 0.0;
  std::vector<UtteranceResult> utterances;
  std::map<std::string, double> ter;
};

struct GridRow {
  std::string codebook_language;
  std::size_t cluster_size = 0;
  std::uint64_t seed = 0;
  std::string codebook_fingerprint;
  double final_inertia = 0.0;
  int kmeans_iterations = 0;
  std::vector<SubsetCell> cells;

  const SubsetCell &cell(const std::string &subset) const;
};

struct DeltaCell {
  std::string subset;
  double wer = 0.0;
  double sentence_accuracy = 0.0;
  double qe = 0.0;
  double mter = 0.0;
};

// minuend - subtrahend, cell by cell.
struct DeltaRow {
  std::string minuend;
  std::string subtrahend;
  std::size_t cluster_size = 0;
  std::uint64_t seed = 0;
  std::vector<DeltaCell> cells;
};

// Seed replication of one WER delta.
struct DeltaSummary {
  std::string minuend;
  std::string subtrahend;
  std::size_t cluster_size = 0;
  std::string subset;
  std::size_t seeds = 0;
  // Seeds where the subtrahend codebook had the lower WER (delta > 0).
  std::size_t subtrahend_wins = 0;
  std::size_t minuend_wins = 0;
  std::size_t ties = 0;
  double mean_wer_delta = 0.0;
  double std_wer_delta = 0.0;
};

struct ExperimentReport {
  std::string target_language;
  std::string accent_language;
  std::vector<std::string> codebook_languages;
  std::vector<std::string> subsets;
  std::vector<GridRow> rows;
  std::vector<DeltaRow> deltas;
  std::vector<DeltaSummary> summaries;

  const GridRow &row(const std::string &language, std::size_t k, std::uint64_t seed) const;
};

// Recomputes deltas and summaries from rows.
void compute_deltas(ExperimentReport &report);

class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::string stage, const std::string &cause, bool data_error,
                  ExperimentReport partial)
      : std::runtime_error("stage '" + stage + "' failed: " + cause),
        stage_(std::move(stage)),
        data_error_(data_error),
        partial_(std::move(partial)) {}
  const std::string &stage() const { return stage_; }
  bool data_error() const { return data_error_; }
  const ExperimentReport &partial() const { return partial_; }

 private:
  std::string stage_;
  bool data_error_;
  ExperimentReport partial_;
};

ExperimentReport run_experiment(const ExperimentConfig &config, int num_threads = 1);

enum class ReportFormat { kTsv, kTable, kJson };
ReportFormat report_format_from_string(const std::string &name);

std::string render_report(const ExperimentReport &report, ReportFormat format);
void write_report(const ExperimentReport &report, const ReportPaths &paths);

ExperimentReport report_from_json(const std::string &json_text);

struct TsvRow {
  std::string kind;  // "row" or "delta"
  std::string codebook;
  std::size_t cluster_size = 0;
  std::uint64_t seed = 0;
  std::string subset;
  std::string condition;
  std::size_t n_utterances = 0;
  double wer = 0.0;
  double sentence_accuracy = 0.0;
  double qe = 0.0;
  double mter = 0.0;
};

std::vector<TsvRow> parse_report_tsv(const std::string &tsv);

}  // namespace dtk

#endif  // DTK_EXPERIMENT_H_
