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

// dtk: command-line front end. Every pipeline stage is its own subcommand
// so intermediate artifacts can be inspected.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dtk/accent_sim.h"
#include "dtk/errors.h"
#include "dtk/experiment.h"
#include "dtk/feature_store.h"
#include "dtk/kmeans.h"
#include "dtk/metrics.h"
#include "dtk/parallel.h"
#include "dtk/recognizer.h"
#include "dtk/tokenizer.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dtk::IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void emit(const std::string &text, const std::string &out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw dtk::IoError("cannot write " + out_path);
  out << text;
}

// Several manifests merged into one record list; duplicate ids rejected.
dtk::Manifest merged_manifest(const std::vector<std::string> &paths) {
  dtk::Manifest merged;
  for (const auto &p : paths) {
    auto m = dtk::load_manifest(p);
    if (merged.records.empty() && merged.corpus_name.empty()) {
      merged.corpus_name = m.corpus_name;
      merged.base_dir = m.base_dir;
    }
    for (auto &r : m.records) {
      if (merged.find(r.utterance_id))
        throw dtk::DuplicateIdError("utterance '" + r.utterance_id + "' appears in two manifests");
      // Keep feature paths resolvable when manifests live in different dirs.
      r.feature_path = (m.base_dir / r.feature_path).string();
      merged.records.push_back(std::move(r));
    }
  }
  merged.base_dir.clear();
  return merged;
}

std::vector<dtk::FeatureMatrix> load_all(const dtk::Manifest &m) {
  std::vector<dtk::FeatureMatrix> out;
  for (const auto &r : m.records) out.push_back(dtk::read_features(m.resolve(r)));
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"dtk - discrete speech token toolkit"};
  app.require_subcommand(1);
  int threads = dtk::default_thread_count();
  app.add_option("--threads", threads, "worker threads (default: $DTK_NUM_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  // gen-synthetic
  auto *gen = app.add_subcommand("gen-synthetic", "generate a synthetic accent corpus");
  std::string plan_path, gen_out;
  std::uint64_t gen_seed = 0;
  bool gen_default = false;
  gen->add_option("--plan", plan_path, "corpus plan (JSON)");
  gen->add_flag("--default-isib", gen_default, "use the built-in ISIB plan");
  gen->add_option("--seed", gen_seed, "override the plan seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train-kmeans
  auto *trn = app.add_subcommand("train-kmeans", "train a codebook on pooled frames");
  std::vector<std::string> trn_manifests;
  std::size_t trn_k = 0;
  std::uint64_t trn_seed = 1;
  std::string trn_lang, trn_out;
  int trn_layer = 12;
  dtk::TrainConfig trn_cfg;
  std::size_t trn_batch = 0;
  trn->add_option("--manifest", trn_manifests, "training manifest(s)")->required();
  trn->add_option("-k,--clusters", trn_k, "cluster size K")->required();
  trn->add_option("--seed", trn_seed, "k-means++ seed");
  trn->add_option("--language", trn_lang, "training language tag (provenance)");
  trn->add_option("--layer", trn_layer, "SSL layer index (provenance)");
  trn->add_option("--max-iter", trn_cfg.max_iterations, "maximum Lloyd iterations");
  trn->add_option("--tol", trn_cfg.rel_tolerance, "relative inertia tolerance");
  trn->add_option("--batch-size", trn_batch, "mini-batch size (default: full batch)");
  trn->add_option("--out", trn_out, "codebook output (.dtkc)")->required();

  // tokenize
  auto *tok = app.add_subcommand("tokenize", "tokenize a manifest with a codebook");
  std::string tok_manifest, tok_codebook, tok_out;
  bool tok_no_dedup = false;
  tok->add_option("--manifest", tok_manifest)->required();
  tok->add_option("--codebook", tok_codebook)->required();
  tok->add_option("--out", tok_out, "token corpus output")->required();
  tok->add_flag("--no-dedup", tok_no_dedup, "keep consecutive duplicates");

  // eval-qe
  auto *qe = app.add_subcommand("eval-qe", "quantization error of a corpus under a codebook");
  std::vector<std::string> qe_manifests;
  std::string qe_codebook;
  qe->add_option("--manifest", qe_manifests)->required();
  qe->add_option("--codebook", qe_codebook)->required();

  // eval-mter
  auto *mt = app.add_subcommand("eval-mter", "mean token error rate against references");
  std::string mt_eval, mt_ref, mt_mode = "native_references", mt_out;
  std::vector<std::string> mt_manifests;
  bool mt_no_dedup = false;
  mt->add_option("--eval", mt_eval, "evaluation token corpus")->required();
  mt->add_option("--reference", mt_ref, "reference token corpus")->required();
  mt->add_option("--manifest", mt_manifests, "manifests covering both corpora")->required();
  mt->add_option("--mode", mt_mode)->check(CLI::IsMember({"native_references", "all_pairs"}));
  mt->add_flag("--no-dedup", mt_no_dedup, "score raw token sequences");
  mt->add_option("--out", mt_out, "per-utterance TSV output");

  // build-index
  auto *bix = app.add_subcommand("build-index", "build a template index");
  std::vector<std::string> bix_tokens;
  std::string bix_manifest, bix_out;
  bix->add_option("--tokens", bix_tokens, "template token corpus(es)")->required();
  bix->add_option("--manifest", bix_manifest)->required();
  bix->add_option("--out", bix_out)->required();

  // recognize
  auto *rec = app.add_subcommand("recognize", "recognize a token corpus against an index");
  std::string rec_index, rec_tokens, rec_manifest, rec_out;
  bool rec_no_loo = false;
  rec->add_option("--index", rec_index)->required();
  rec->add_option("--tokens", rec_tokens)->required();
  rec->add_option("--manifest", rec_manifest)->required();
  rec->add_option("--out", rec_out, "recognition TSV output (default stdout)");
  rec->add_flag("--no-leave-one-out", rec_no_loo, "allow an utterance to match itself");

  // run-experiment
  auto *run = app.add_subcommand("run-experiment", "run a full codebook comparison");
  std::string run_config, run_json, run_tsv, run_table;
  run->add_option("--config", run_config)->required();
  run->add_option("--json", run_json, "override report.json path");
  run->add_option("--tsv", run_tsv, "override report.tsv path");
  run->add_option("--table", run_table, "override report.table path");

  // render-report
  auto *ren = app.add_subcommand("render-report", "render a JSON report dump");
  std::string ren_report, ren_format = "table", ren_out;
  ren->add_option("--report", ren_report)->required();
  ren->add_option("--format", ren_format, "tsv, table or json");
  ren->add_option("--out", ren_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      if (gen_default == !plan_path.empty())
        throw CLI::ValidationError("gen-synthetic", "give exactly one of --plan or --default-isib");
      dtk::CorpusPlan plan = gen_default ? dtk::default_isib_plan()
                                         : dtk::corpus_plan_from_json(slurp(plan_path), plan_path);
      if (gen->count("--seed")) plan.seed = gen_seed;
      auto corpus = dtk::build_corpus(plan, threads);
      dtk::write_corpus(corpus, gen_out);
      for (const auto &s : corpus.splits)
        std::cout << s.plan.name << "\t" << dtk::to_string(s.plan.role) << "\t"
                  << s.manifest.size() << " utterances\n";
    } else if (trn->parsed()) {
      auto manifest = merged_manifest(trn_manifests);
      dtk::FeatureMatrix pooled;
      for (const auto &m : load_all(manifest)) pooled.append_rows(m);
      if (pooled.empty()) throw dtk::InsufficientDataError("no training frames");
      if (trn_batch > 0) trn_cfg.batch_size = trn_batch;
      trn_cfg.num_threads = threads;
      auto result = dtk::train_traced(pooled, trn_k, trn_cfg, trn_seed);
      result.codebook.train_language = trn_lang;
      result.codebook.ssl_layer = trn_layer;
      dtk::save_codebook(result.codebook, trn_out);
      std::cout << "K=" << trn_k << " frames=" << pooled.n_frames()
                << " iterations=" << result.iterations << " converged=" << result.converged
                << " inertia=" << result.codebook.final_inertia
                << " fingerprint=" << result.codebook.fingerprint() << "\n";
    } else if (tok->parsed()) {
      auto manifest = dtk::load_manifest(tok_manifest);
      auto codebook = dtk::load_codebook(tok_codebook);
      auto outcome = dtk::tokenize_corpus(manifest, codebook, !tok_no_dedup, threads);
      dtk::save_token_corpus(outcome.corpus, tok_out);
      for (const auto &f : outcome.failures)
        std::cerr << "error: " << f.utterance_id << ": " << f.message << "\n";
      std::cout << outcome.corpus.sequences.size() << " tokenized, " << outcome.failures.size()
                << " failed\n";
      if (!outcome.ok()) return kExitData;
    } else if (qe->parsed()) {
      auto manifest = merged_manifest(qe_manifests);
      auto codebook = dtk::load_codebook(qe_codebook);
      auto mats = load_all(manifest);
      double value = dtk::quantization_error(mats, codebook, threads);
      std::size_t frames = 0;
      for (const auto &m : mats) frames += m.n_frames();
      std::cout << nlohmann::json{{"qe", value}, {"frames", frames},
                                  {"codebook", codebook.fingerprint()}}.dump()
                << "\n";
    } else if (mt->parsed()) {
      auto eval = dtk::load_token_corpus(mt_eval);
      auto ref = dtk::load_token_corpus(mt_ref);
      std::vector<dtk::Manifest> manifests;
      for (const auto &p : mt_manifests) manifests.push_back(dtk::load_manifest(p));
      std::vector<const dtk::Manifest *> ptrs;
      for (const auto &m : manifests) ptrs.push_back(&m);
      dtk::MterOptions opt;
      opt.mode = mt_mode == "all_pairs" ? dtk::MterMode::kAllPairs : dtk::MterMode::kNativeReferences;
      opt.dedup = !mt_no_dedup;
      opt.num_threads = threads;
      auto report = dtk::mter(eval, ref, ptrs, opt);
      if (!mt_out.empty()) {
        std::string tsv = "utterance_id\tter\n";
        char buf[32];
        for (const auto &[id, v] : report.per_utterance) {
          std::snprintf(buf, sizeof(buf), "%.6f", v);
          tsv += id + "\t" + buf + "\n";
        }
        emit(tsv, mt_out);
      }
      std::cout << nlohmann::json{{"mter", report.corpus_mter},
                                  {"utterances", report.per_utterance.size()}}.dump()
                << "\n";
    } else if (bix->parsed()) {
      std::vector<dtk::TokenCorpus> corpora;
      for (const auto &p : bix_tokens) corpora.push_back(dtk::load_token_corpus(p));
      std::vector<const dtk::TokenCorpus *> ptrs;
      for (const auto &c : corpora) ptrs.push_back(&c);
      auto index = dtk::build_template_index(ptrs, dtk::load_manifest(bix_manifest));
      dtk::save_template_index(index, bix_out);
      std::cout << index.entries.size() << " templates\n";
    } else if (rec->parsed()) {
      auto index = dtk::load_template_index(rec_index);
      auto corpus = dtk::load_token_corpus(rec_tokens);
      auto manifest = dtk::load_manifest(rec_manifest);
      dtk::EvaluateOptions opt;
      opt.leave_one_out = !rec_no_loo;
      opt.num_threads = threads;
      auto result = dtk::evaluate(corpus, manifest, index, opt);
      emit(dtk::format_recognition_output(result), rec_out);
      std::cerr << "wer=" << result.wer << " sentence_accuracy=" << result.sentence_accuracy
                << "\n";
    } else if (run->parsed()) {
      auto config = dtk::load_experiment_config(run_config);
      if (!run_json.empty()) config.report.json = run_json;
      if (!run_tsv.empty()) config.report.tsv = run_tsv;
      if (!run_table.empty()) config.report.table = run_table;
      try {
        auto report = dtk::run_experiment(config, threads);
        dtk::write_report(report, config.report);
        if (!config.report.table) std::cout << dtk::render_report(report, dtk::ReportFormat::kTable);
      } catch (const dtk::ExperimentError &e) {
        dtk::write_report(e.partial(), config.report);
        std::cerr << "error: " << e.what() << " (partial report written)\n";
        return e.data_error() ? kExitData : kExitInternal;
      }
    } else if (ren->parsed()) {
      auto format = dtk::report_format_from_string(ren_format);
      auto report = dtk::report_from_json(slurp(ren_report));
      emit(dtk::render_report(report, format), ren_out);
    }
  } catch (const CLI::Error &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dtk::DataError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
