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

#include "dtk/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "byte_io.h"
#include "dtk/errors.h"
#include "dtk/random.h"
#include "json.hpp"

namespace dtk {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (corpus_plan.has_value() == corpus_dir.has_value())
    throw DataError("config needs exactly one of 'corpus' or 'corpus_dir'");
  if (codebook_languages.empty()) throw DataError("config lists no codebook languages");
  if (cluster_sizes.empty()) throw DataError("config lists no cluster sizes");
  for (auto k : cluster_sizes)
    if (k < 2) throw DataError("cluster sizes must be >= 2");
  if (seeds.empty()) throw DataError("config needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw DataError("seeds must be distinct");
  if (worst_speakers < 1) throw DataError("worst_speakers must be >= 1");
  if (kmeans.max_iterations < 1 || !(kmeans.rel_tolerance > 0.0))
    throw DataError("kmeans needs max_iterations >= 1 and rel_tolerance > 0");
}

namespace {

void reject_unknown_keys(const json &j, std::initializer_list<const char *> known,
                         const std::string &where) {
  if (!j.is_object()) throw DataError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *k : known) ok = ok || it.key() == k;
    if (!ok) throw DataError(where + ": unknown key '" + it.key() + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string &json_text,
                                             const std::filesystem::path &base_dir,
                                             const std::string &source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw DataError(source + ": " + e.what());
  }
  ExperimentConfig c;
  try {
    reject_unknown_keys(j, {"corpus", "corpus_dir", "codebook_languages", "cluster_sizes",
                            "ssl_layer", "seeds", "worst_speakers", "dedup", "mter_mode",
                            "kmeans", "report"},
                        source);
    if (j.contains("corpus")) c.corpus_plan = corpus_plan_from_json(j["corpus"].dump(), source + ": corpus");
    if (j.contains("corpus_dir"))
      c.corpus_dir = resolve(base_dir, j["corpus_dir"].get<std::string>());
    c.codebook_languages = j.at("codebook_languages").get<std::vector<std::string>>();
    c.cluster_sizes = j.at("cluster_sizes").get<std::vector<std::size_t>>();
    c.ssl_layer = j.value("ssl_layer", c.ssl_layer);
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.worst_speakers = j.value("worst_speakers", c.worst_speakers);
    c.dedup = j.value("dedup", c.dedup);
    if (j.contains("mter_mode")) {
      auto m = j["mter_mode"].get<std::string>();
      if (m == "native_references") c.mter_mode = MterMode::kNativeReferences;
      else if (m == "all_pairs") c.mter_mode = MterMode::kAllPairs;
      else throw DataError(source + ": unknown mter_mode '" + m + "'");
    }
    if (j.contains("kmeans")) {
      const auto &k = j["kmeans"];
      reject_unknown_keys(k, {"max_iterations", "rel_tolerance", "batch_size"}, source + ": kmeans");
      c.kmeans.max_iterations = k.value("max_iterations", c.kmeans.max_iterations);
      c.kmeans.rel_tolerance = k.value("rel_tolerance", c.kmeans.rel_tolerance);
      if (k.contains("batch_size") && !(k["batch_size"].is_string() && k["batch_size"] == "full"))
        c.kmeans.batch_size = k["batch_size"].get<std::size_t>();
    }
    if (j.contains("report")) {
      const auto &r = j["report"];
      reject_unknown_keys(r, {"json", "tsv", "table"}, source + ": report");
      if (r.contains("json")) c.report.json = resolve(base_dir, r["json"].get<std::string>());
      if (r.contains("tsv")) c.report.tsv = resolve(base_dir, r["tsv"].get<std::string>());
      if (r.contains("table")) c.report.table = resolve(base_dir, r["table"].get<std::string>());
    }
  } catch (const json::exception &e) {
    throw DataError(source + ": " + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path) {
  return experiment_config_from_json(internal::read_file_text(path), path.parent_path(),
                                     path.string());
}

ExperimentConfig default_isib_config(std::size_t num_seeds) {
  ExperimentConfig c;
  c.corpus_plan = default_isib_plan();
  c.codebook_languages = {"T", "X", "Z"};
  c.cluster_sizes = {128};
  for (std::size_t s = 1; s <= num_seeds; ++s) c.seeds.push_back(s);
  return c;
}

// ---------------------------------------------------------------------------

Manifest select_worst_speakers(const Manifest &manifest, std::size_t n) {
  if (n == 0) throw InsufficientDataError("worst-speaker subset of size 0");
  std::map<std::string, double> strength;
  for (const auto &r : manifest.records) {
    if (r.is_native()) continue;
    auto [it, fresh] = strength.emplace(r.speaker_id, r.accent_strength);
    if (!fresh) it->second = std::max(it->second, r.accent_strength);
  }
  if (strength.size() < n)
    throw InsufficientDataError("asked for " + std::to_string(n) + " worst speakers but only " +
                                std::to_string(strength.size()) + " accented speakers exist");
  std::vector<std::pair<std::string, double>> ranked(strength.begin(), strength.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::set<std::string> chosen;
  for (std::size_t i = 0; i < n; ++i) chosen.insert(ranked[i].first);
  Manifest subset;
  subset.corpus_name = manifest.corpus_name + "/worst" + std::to_string(n);
  subset.base_dir = manifest.base_dir;
  for (const auto &r : manifest.records)
    if (chosen.count(r.speaker_id)) subset.records.push_back(r);
  return subset;
}

const SubsetCell &GridRow::cell(const std::string &subset) const {
  for (const auto &c : cells)
    if (c.subset == subset) return c;
  throw std::out_of_range("no cell for subset '" + subset + "'");
}

const GridRow &ExperimentReport::row(const std::string &language, std::size_t k,
                                     std::uint64_t seed) const {
  for (const auto &r : rows)
    if (r.codebook_language == language && r.cluster_size == k && r.seed == seed) return r;
  throw std::out_of_range("no row for " + language + "/" + std::to_string(k) + "/" +
                          std::to_string(seed));
}

void compute_deltas(ExperimentReport &report) {
  report.deltas.clear();
  report.summaries.clear();
  const auto &langs = report.codebook_languages;
  std::vector<std::size_t> ks;
  std::vector<std::uint64_t> seeds;
  for (const auto &r : report.rows) {
    if (std::find(ks.begin(), ks.end(), r.cluster_size) == ks.end()) ks.push_back(r.cluster_size);
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
  }
  for (std::size_t a = 0; a < langs.size(); ++a) {
    for (std::size_t b = a + 1; b < langs.size(); ++b) {
      for (auto k : ks) {
        std::map<std::string, std::vector<double>> wer_deltas;
        for (auto seed : seeds) {
          const GridRow *ra = nullptr, *rb = nullptr;
          for (const auto &r : report.rows) {
            if (r.cluster_size != k || r.seed != seed) continue;
            if (r.codebook_language == langs[a] && !ra) ra = &r;
            else if (r.codebook_language == langs[b] && !rb) rb = &r;
          }
          if (!ra || !rb) continue;
          DeltaRow d{langs[a], langs[b], k, seed, {}};
          for (const auto &ca : ra->cells) {
            const auto &cb = rb->cell(ca.subset);
            d.cells.push_back({ca.subset, ca.wer - cb.wer,
                               ca.sentence_accuracy - cb.sentence_accuracy, ca.qe - cb.qe,
                               ca.mter - cb.mter});
            wer_deltas[ca.subset].push_back(ca.wer - cb.wer);
          }
          report.deltas.push_back(std::move(d));
        }
        for (const auto &subset : report.subsets) {
          auto it = wer_deltas.find(subset);
          if (it == wer_deltas.end()) continue;
          const auto &v = it->second;
          DeltaSummary s;
          s.minuend = langs[a];
          s.subtrahend = langs[b];
          s.cluster_size = k;
          s.subset = subset;
          s.seeds = v.size();
          double sum = 0.0;
          for (double x : v) {
            sum += x;
            if (x > 0) ++s.subtrahend_wins;
            else if (x < 0) ++s.minuend_wins;
            else ++s.ties;
          }
          s.mean_wer_delta = sum / static_cast<double>(v.size());
          double ss = 0.0;
          for (double x : v) ss += (x - s.mean_wer_delta) * (x - s.mean_wer_delta);
          s.std_wer_delta = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
          report.summaries.push_back(s);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

bool is_data_error(const std::exception &e) {
  return dynamic_cast<const DataError *>(&e) != nullptr;
}

std::string condition_label(const std::string &codebook, const std::string &spoken,
                            const std::string &speaker_native) {
  if (codebook == spoken) return "spoken-language";
  if (codebook == speaker_native) return "matched";
  return "mismatched";
}

struct EvalSubset {
  std::string name;
  std::string speaker_native;
  Manifest manifest;
  std::vector<const FeatureMatrix *> features;
};

// Pulls the records of `subset` out of a split, keeping feature pointers.
EvalSubset make_subset(const std::string &name, const CorpusSplit &split, const Manifest &subset,
                       const std::string &speaker_native) {
  EvalSubset out{name, speaker_native, subset, {}};
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < split.manifest.records.size(); ++i)
    pos.emplace(split.manifest.records[i].utterance_id, i);
  for (const auto &r : subset.records) out.features.push_back(&split.features.at(pos.at(r.utterance_id)));
  return out;
}

void check_isolation(const SyntheticCorpus &corpus) {
  std::set<std::string> train_speakers, train_utts;
  for (const auto &s : corpus.splits) {
    if (s.plan.role != SplitRole::kTokenizerTrain && s.plan.role != SplitRole::kAsrTrain) continue;
    for (const auto &r : s.manifest.records) {
      train_speakers.insert(r.speaker_id);
      train_utts.insert(r.utterance_id);
    }
  }
  for (const auto &s : corpus.splits) {
    if (s.plan.role != SplitRole::kNativeEval && s.plan.role != SplitRole::kAccentedEval) continue;
    for (const auto &r : s.manifest.records) {
      if (train_speakers.count(r.speaker_id) || train_utts.count(r.utterance_id))
        throw DataError("evaluation utterance '" + r.utterance_id +
                        "' shares a speaker with a training split");
    }
  }
  for (const auto &s : corpus.splits) {
    if (s.plan.role != SplitRole::kTokenizerTrain) continue;
    for (const auto &r : s.manifest.records)
      if (!r.is_native())
        throw DataError("codebook training split '" + s.plan.name +
                        "' contains non-native speech (" + r.utterance_id + ")");
  }
}

TokenCorpus tokenize_matrices(const Manifest &manifest,
                              const std::vector<const FeatureMatrix *> &features,
                              const Codebook &codebook, bool dedup, int num_threads) {
  std::vector<FeatureMatrix> copies;
  copies.reserve(features.size());
  for (const auto *f : features) copies.push_back(*f);
  auto outcome = tokenize_corpus(manifest, copies, codebook, dedup, num_threads);
  if (!outcome.ok())
    throw DataError(outcome.failures.front().utterance_id + ": " +
                    outcome.failures.front().message);
  return std::move(outcome.corpus);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig &config, int num_threads) {
  config.validate();
  ExperimentReport report;
  report.codebook_languages = config.codebook_languages;
  report.subsets = {"native", "accented", "accented_worst"};

  std::string stage = "corpus";
  auto fail = [&](const std::exception &e) -> ExperimentError {
    compute_deltas(report);
    return ExperimentError(stage, e.what(), is_data_error(e), report);
  };

  std::optional<SyntheticCorpus> fixed_corpus;
  try {
    if (config.corpus_dir) fixed_corpus = read_corpus(*config.corpus_dir);
  } catch (const std::exception &e) {
    throw fail(e);
  }

  for (std::uint64_t seed : config.seeds) {
    try {
      stage = "corpus";
      SyntheticCorpus generated;
      if (!fixed_corpus) {
        CorpusPlan plan = *config.corpus_plan;
        plan.seed = seed;
        generated = build_corpus(plan, num_threads);
      }
      const SyntheticCorpus &corpus = fixed_corpus ? *fixed_corpus : generated;
      report.target_language = corpus.plan.target_language;

      stage = "isolation";
      check_isolation(corpus);
      const CorpusSplit *asr = corpus.find_role(SplitRole::kAsrTrain);
      const CorpusSplit *native = corpus.find_role(SplitRole::kNativeEval);
      const CorpusSplit *accented = corpus.find_role(SplitRole::kAccentedEval);
      if (!asr || !native || !accented)
        throw DataError("corpus needs asr_train, native_eval and accented_eval splits");
      report.accent_language = accented->plan.language;

      stage = "subsets";
      std::vector<EvalSubset> subsets;
      subsets.push_back(make_subset("native", *native, native->manifest, report.target_language));
      subsets.push_back(make_subset("accented", *accented, accented->manifest,
                                    accented->plan.language));
      subsets.push_back(make_subset("accented_worst", *accented,
                                    select_worst_speakers(accented->manifest, config.worst_speakers),
                                    accented->plan.language));
      std::vector<const FeatureMatrix *> asr_features;
      for (const auto &f : asr->features) asr_features.push_back(&f);

      for (const auto &lang : config.codebook_languages) {
        stage = "pool:" + lang;
        const CorpusSplit *km = corpus.find_role(SplitRole::kTokenizerTrain, lang);
        if (!km) throw DataError("no tokenizer_train split for language '" + lang + "'");
        FeatureMatrix pooled;
        for (const auto &f : km->features) pooled.append_rows(f);

        for (std::size_t k : config.cluster_sizes) {
          const std::string cell_tag = lang + "/K=" + std::to_string(k) + "/seed=" + std::to_string(seed);
          stage = "kmeans:" + cell_tag;
          TrainConfig tc = config.kmeans;
          tc.num_threads = num_threads;
          // Independent of the language tag so identical data trains an
          // identical codebook.
          TrainResult trained = train_traced(pooled, k, tc, derive_seed(seed, k));
          Codebook &cb = trained.codebook;
          cb.train_language = lang;
          cb.ssl_layer = config.ssl_layer;

          stage = "tokenize:" + cell_tag;
          TokenCorpus templates_tok =
              tokenize_matrices(asr->manifest, asr_features, cb, config.dedup, num_threads);
          TokenCorpus native_tok = tokenize_matrices(subsets[0].manifest, subsets[0].features, cb,
                                                     config.dedup, num_threads);
          stage = "index:" + cell_tag;
          TemplateIndex index = build_template_index(templates_tok, asr->manifest);

          GridRow row;
          row.codebook_language = lang;
          row.cluster_size = k;
          row.seed = seed;
          row.codebook_fingerprint = cb.fingerprint();
          row.final_inertia = cb.final_inertia;
          row.kmeans_iterations = trained.iterations;

          for (const auto &subset : subsets) {
            stage = "evaluate:" + subset.name + ":" + cell_tag;
            TokenCorpus tok = subset.name == "native"
                                  ? native_tok
                                  : tokenize_matrices(subset.manifest, subset.features, cb,
                                                      config.dedup, num_threads);
            SubsetCell cell;
            cell.subset = subset.name;
            cell.condition = condition_label(lang, report.target_language, subset.speaker_native);
            cell.n_utterances = subset.manifest.size();
            EvaluateOptions eo;
            eo.num_threads = num_threads;
            auto ev = evaluate(tok, subset.manifest, index, eo);
            cell.wer = ev.wer;
            cell.sentence_accuracy = ev.sentence_accuracy;
            cell.utterances = std::move(ev.utterances);

            stage = "qe:" + subset.name + ":" + cell_tag;
            std::vector<FeatureMatrix> mats;
            for (const auto *f : subset.features) mats.push_back(*f);
            cell.qe = quantization_error(mats, cb, num_threads);

            stage = "mter:" + subset.name + ":" + cell_tag;
            MterOptions mo;
            mo.mode = config.mter_mode;
            mo.dedup = config.dedup;
            mo.num_threads = num_threads;
            auto m = mter(tok, native_tok, {&subset.manifest, &subsets[0].manifest}, mo);
            cell.mter = m.corpus_mter;
            cell.ter = std::move(m.per_utterance);
            row.cells.push_back(std::move(cell));
          }
          report.rows.push_back(std::move(row));
        }
      }
    } catch (const ExperimentError &) {
      throw;
    } catch (const std::exception &e) {
      throw fail(e);
    }
  }

  compute_deltas(report);
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

ReportFormat report_format_from_string(const std::string &name) {
  if (name == "tsv") return ReportFormat::kTsv;
  if (name == "table") return ReportFormat::kTable;
  if (name == "json") return ReportFormat::kJson;
  throw DataError("unknown report format '" + name + "' (expected tsv, table or json)");
}

namespace {

std::string fixed(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

ordered_json to_json(const ExperimentReport &r) {
  ordered_json j;
  j["target_language"] = r.target_language;
  j["accent_language"] = r.accent_language;
  j["codebook_languages"] = r.codebook_languages;
  j["subsets"] = r.subsets;
  j["accent_strength_note"] =
      "accent_strength is the simulator's assimilation probability, not a human rating";
  j["rows"] = ordered_json::array();
  for (const auto &row : r.rows) {
    ordered_json jr;
    jr["codebook_language"] = row.codebook_language;
    jr["cluster_size"] = row.cluster_size;
    jr["seed"] = row.seed;
    jr["codebook_fingerprint"] = row.codebook_fingerprint;
    jr["final_inertia"] = row.final_inertia;
    jr["kmeans_iterations"] = row.kmeans_iterations;
    jr["cells"] = ordered_json::array();
    for (const auto &c : row.cells) {
      ordered_json jc;
      jc["subset"] = c.subset;
      jc["condition"] = c.condition;
      jc["n_utterances"] = c.n_utterances;
      jc["wer"] = c.wer;
      jc["sentence_accuracy"] = c.sentence_accuracy;
      jc["qe"] = c.qe;
      jc["mter"] = c.mter;
      jc["utterances"] = ordered_json::array();
      for (const auto &u : c.utterances) {
        ordered_json ju;
        ju["utterance_id"] = u.utterance_id;
        ju["speaker_id"] = u.speaker_id;
        ju["reference_sentence"] = u.reference_sentence;
        ju["predicted_sentence"] = u.predicted_sentence;
        ju["score"] = u.score;
        ju["hypothesis"] = u.hypothesis;
        ju["word_errors"] = u.word_errors;
        ju["reference_words"] = u.reference_words;
        ju["correct"] = u.correct;
        auto t = c.ter.find(u.utterance_id);
        if (t != c.ter.end()) ju["ter"] = t->second;
        jc["utterances"].push_back(ju);
      }
      jr["cells"].push_back(jc);
    }
    j["rows"].push_back(jr);
  }
  j["deltas"] = ordered_json::array();
  for (const auto &d : r.deltas) {
    ordered_json jd;
    jd["minuend"] = d.minuend;
    jd["subtrahend"] = d.subtrahend;
    jd["cluster_size"] = d.cluster_size;
    jd["seed"] = d.seed;
    jd["cells"] = ordered_json::array();
    for (const auto &c : d.cells)
      jd["cells"].push_back({{"subset", c.subset},
                             {"wer", c.wer},
                             {"sentence_accuracy", c.sentence_accuracy},
                             {"qe", c.qe},
                             {"mter", c.mter}});
    j["deltas"].push_back(jd);
  }
  j["summaries"] = ordered_json::array();
  for (const auto &s : r.summaries) {
    ordered_json js;
    js["minuend"] = s.minuend;
    js["subtrahend"] = s.subtrahend;
    js["cluster_size"] = s.cluster_size;
    js["subset"] = s.subset;
    js["seeds"] = s.seeds;
    js["subtrahend_wins"] = s.subtrahend_wins;
    js["minuend_wins"] = s.minuend_wins;
    js["ties"] = s.ties;
    js["mean_wer_delta"] = s.mean_wer_delta;
    js["std_wer_delta"] = s.std_wer_delta;
    j["summaries"].push_back(js);
  }
  return j;
}

std::string render_tsv(const ExperimentReport &r) {
  std::string out =
      "kind\tcodebook\tcluster_size\tseed\tsubset\tcondition\tn_utterances\twer\t"
      "sentence_accuracy\tqe\tmter\n";
  for (const auto &row : r.rows)
    for (const auto &c : row.cells)
      out += "row\t" + row.codebook_language + "\t" + std::to_string(row.cluster_size) + "\t" +
             std::to_string(row.seed) + "\t" + c.subset + "\t" + c.condition + "\t" +
             std::to_string(c.n_utterances) + "\t" + fixed(c.wer) + "\t" +
             fixed(c.sentence_accuracy) + "\t" + fixed(c.qe) + "\t" + fixed(c.mter) + "\n";
  for (const auto &d : r.deltas)
    for (const auto &c : d.cells)
      out += "delta\t" + d.minuend + "-" + d.subtrahend + "\t" + std::to_string(d.cluster_size) +
             "\t" + std::to_string(d.seed) + "\t" + c.subset + "\t-\t0\t" + fixed(c.wer) + "\t" +
             fixed(c.sentence_accuracy) + "\t" + fixed(c.qe) + "\t" + fixed(c.mter) + "\n";
  return out;
}

std::string condition_tag(const std::string &condition) {
  if (condition == "spoken-language") return "sp";
  if (condition == "matched") return "ma";
  return "mm";
}

std::string pad(const std::string &s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render_table(const ExperimentReport &r) {
  std::ostringstream out;
  out << "target language: " << r.target_language
      << "   accent language: " << r.accent_language << "\n";
  out << "WER% / sentence accuracy% / QE / MTER% per evaluation subset\n\n";
  std::vector<std::pair<std::size_t, std::uint64_t>> groups;
  for (const auto &row : r.rows) {
    std::pair<std::size_t, std::uint64_t> g{row.cluster_size, row.seed};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  const std::size_t w = 34;
  for (const auto &[k, seed] : groups) {
    out << "K=" << k << " seed=" << seed << "\n";
    out << pad("codebook", 12);
    for (const auto &s : r.subsets) out << pad(s, w);
    out << "\n";
    for (const auto &row : r.rows) {
      if (row.cluster_size != k || row.seed != seed) continue;
      out << pad(row.codebook_language, 12);
      for (const auto &s : r.subsets) {
        const auto &c = row.cell(s);
        out << pad(fixed(100 * c.wer, 1) + " / " + fixed(100 * c.sentence_accuracy, 1) + " / " +
                       fixed(c.qe, 2) + " / " + fixed(100 * c.mter, 1) + " [" +
                       condition_tag(c.condition) + "]",
                   w);
      }
      out << "\n";
    }
    for (const auto &d : r.deltas) {
      if (d.cluster_size != k || d.seed != seed) continue;
      out << pad("D(" + d.minuend + "-" + d.subtrahend + ")", 12);
      for (const auto &c : d.cells)
        out << pad(fixed(100 * c.wer, 1) + " / " + fixed(100 * c.sentence_accuracy, 1) + " / " +
                       fixed(c.qe, 2) + " / " + fixed(100 * c.mter, 1),
                   w);
      out << "\n";
    }
    out << "\n";
  }
  if (!r.summaries.empty()) {
    out << "WER delta over seeds (positive: second codebook better)\n";
    for (const auto &s : r.summaries)
      out << "  D(" << s.minuend << "-" << s.subtrahend << ") K=" << s.cluster_size << " "
          << pad(s.subset, 16) << " mean " << fixed(100 * s.mean_wer_delta, 2) << " +- "
          << fixed(100 * s.std_wer_delta, 2) << "   wins " << s.subtrahend << ":"
          << s.subtrahend_wins << " " << s.minuend << ":" << s.minuend_wins
          << " ties:" << s.ties << " of " << s.seeds << "\n";
  }
  out << "[sp]=spoken-language  [ma]=matched  [mm]=mismatched codebook\n";
  return out.str();
}

}  // namespace

std::string render_report(const ExperimentReport &report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kTsv: return render_tsv(report);
    case ReportFormat::kTable: return render_table(report);
    case ReportFormat::kJson: return to_json(report).dump(1) + "\n";
  }
  throw DataError("unknown report format");
}

void write_report(const ExperimentReport &report, const ReportPaths &paths) {
  if (paths.json) internal::write_file_text(*paths.json, render_report(report, ReportFormat::kJson));
  if (paths.tsv) internal::write_file_text(*paths.tsv, render_report(report, ReportFormat::kTsv));
  if (paths.table)
    internal::write_file_text(*paths.table, render_report(report, ReportFormat::kTable));
}

ExperimentReport report_from_json(const std::string &json_text) {
  ExperimentReport r;
  try {
    auto j = json::parse(json_text);
    r.target_language = j.at("target_language").get<std::string>();
    r.accent_language = j.at("accent_language").get<std::string>();
    r.codebook_languages = j.at("codebook_languages").get<std::vector<std::string>>();
    r.subsets = j.at("subsets").get<std::vector<std::string>>();
    for (const auto &jr : j.at("rows")) {
      GridRow row;
      row.codebook_language = jr.at("codebook_language").get<std::string>();
      row.cluster_size = jr.at("cluster_size").get<std::size_t>();
      row.seed = jr.at("seed").get<std::uint64_t>();
      row.codebook_fingerprint = jr.at("codebook_fingerprint").get<std::string>();
      row.final_inertia = jr.at("final_inertia").get<double>();
      row.kmeans_iterations = jr.at("kmeans_iterations").get<int>();
      for (const auto &jc : jr.at("cells")) {
        SubsetCell c;
        c.subset = jc.at("subset").get<std::string>();
        c.condition = jc.at("condition").get<std::string>();
        c.n_utterances = jc.at("n_utterances").get<std::size_t>();
        c.wer = jc.at("wer").get<double>();
        c.sentence_accuracy = jc.at("sentence_accuracy").get<double>();
        c.qe = jc.at("qe").get<double>();
        c.mter = jc.at("mter").get<double>();
        for (const auto &ju : jc.at("utterances")) {
          UtteranceResult u;
          u.utterance_id = ju.at("utterance_id").get<std::string>();
          u.speaker_id = ju.at("speaker_id").get<std::string>();
          u.reference_sentence = ju.at("reference_sentence").get<std::string>();
          u.predicted_sentence = ju.at("predicted_sentence").get<std::string>();
          u.score = ju.at("score").get<double>();
          u.hypothesis = ju.at("hypothesis").get<std::vector<std::string>>();
          u.word_errors = ju.at("word_errors").get<std::size_t>();
          u.reference_words = ju.at("reference_words").get<std::size_t>();
          u.correct = ju.at("correct").get<bool>();
          if (ju.contains("ter")) c.ter[u.utterance_id] = ju["ter"].get<double>();
          c.utterances.push_back(std::move(u));
        }
        row.cells.push_back(std::move(c));
      }
      r.rows.push_back(std::move(row));
    }
  } catch (const json::exception &e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  compute_deltas(r);
  return r;
}

std::vector<TsvRow> parse_report_tsv(const std::string &tsv) {
  std::istringstream in(tsv);
  std::string line;
  std::vector<TsvRow> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) f.push_back(field);
    if (f.size() != 11) throw ParseError("<tsv>", line_no, "expected 11 columns");
    try {
      rows.push_back({f[0], f[1], std::stoul(f[2]), std::stoull(f[3]), f[4], f[5],
                      std::stoul(f[6]), std::stod(f[7]), std::stod(f[8]), std::stod(f[9]),
                      std::stod(f[10])});
    } catch (const std::exception &) {
      throw ParseError("<tsv>", line_no, "bad numeric field");
    }
  }
  return rows;
}

}  // namespace dtk
