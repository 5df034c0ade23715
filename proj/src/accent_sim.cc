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

#include "dtk/accent_sim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "byte_io.h"
#include "dtk/errors.h"
#include "dtk/parallel.h"
#include "dtk/random.h"
#include "json.hpp"

namespace dtk {

namespace {

double distance(const std::vector<double> &a, const std::vector<double> &b) {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) acc += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(acc);
}

std::string category_label(std::size_t i) {
  static const char *const kOnsets[] = {"p", "t", "k", "b", "d", "g", "m", "n",
                                        "s", "r", "l", "w", "y", "h", "f", "z"};
  static const char *const kVowels[] = {"a", "e", "i", "o", "u"};
  constexpr std::size_t kSyllables = 16 * 5;
  auto syllable = [](std::size_t s) {
    return std::string(kOnsets[s % 16]) + kVowels[(s / 16) % 5];
  };
  // (i mod 80, (37 i + i / 80) mod 80) is injective for i < 6400.
  std::string label = syllable(i % kSyllables) + syllable((37 * i + i / kSyllables) % kSyllables);
  if (i >= kSyllables * kSyllables) label += std::to_string(i / (kSyllables * kSyllables));
  return label;
}

}  // namespace

void LanguageInventory::validate() const {
  const std::size_t c = categories.size();
  if (c < 2) throw RangeError(language_tag + ": inventory needs at least 2 categories");
  if (labels.size() != c || transitions.size() != c)
    throw RangeError(language_tag + ": labels/transitions do not match category count");
  if (std::set<std::string>(labels.begin(), labels.end()).size() != c)
    throw RangeError(language_tag + ": category labels must be distinct");
  const std::size_t d = dim();
  for (const auto &cat : categories) {
    if (cat.mean.size() != d || d == 0)
      throw RangeError(language_tag + ": inconsistent category dimension");
    if (!(cat.spread > 0.0)) throw RangeError(language_tag + ": spread must be positive");
  }
  for (std::size_t i = 0; i < c; ++i) {
    if (transitions[i].size() != c) throw RangeError(language_tag + ": transition row size");
    double sum = 0.0;
    for (double p : transitions[i]) {
      if (p < 0.0) throw RangeError(language_tag + ": negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw RangeError(language_tag + ": transition row " + std::to_string(i) +
                       " does not sum to 1");
    for (std::size_t j = 0; j < i; ++j)
      if (categories[i].mean == categories[j].mean)
        throw RangeError(language_tag + ": duplicate category means");
  }
}

LanguageInventory make_inventory(const std::string &language_tag, std::size_t num_categories,
                                 std::size_t dim, double separation, std::uint64_t seed,
                                 double spread) {
  if (num_categories < 2 || dim < 1 || !(separation > 0.0) || !(spread > 0.0))
    throw std::invalid_argument("make_inventory: need C >= 2, D >= 1, separation > 0, spread > 0");
  constexpr int kRetries = 2000;
  Rng rng(derive_seed(seed, "inventory:" + language_tag));
  const double min_dist = separation * spread;
  // Means are drawn from N(0, s^2 I) with s = separation * spread, which
  // leaves plenty of room for dozens of categories once D >= 4.
  const double scale = separation * spread;
  LanguageInventory inv;
  inv.language_tag = language_tag;
  for (std::size_t c = 0; c < num_categories; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kRetries && !placed; ++attempt) {
      std::vector<double> mean(dim);
      for (auto &v : mean) v = scale * rng.normal();
      placed = std::all_of(inv.categories.begin(), inv.categories.end(),
                           [&](const PhoneCategory &o) { return distance(o.mean, mean) >= min_dist; });
      if (placed) inv.categories.push_back({std::move(mean), spread});
    }
    if (!placed)
      throw DataError(language_tag + ": could not place " + std::to_string(num_categories) +
                      " categories " + std::to_string(min_dist) + " apart in " +
                      std::to_string(dim) + " dimensions");
  }
  inv.transitions.assign(num_categories, std::vector<double>(num_categories));
  for (auto &row : inv.transitions) {
    // Dirichlet(1) rows.
    double sum = 0.0;
    for (auto &p : row) sum += (p = -std::log(1.0 - rng.uniform()) + 1e-12);
    for (auto &p : row) p /= sum;
  }
  for (std::size_t c = 0; c < num_categories; ++c) inv.labels.push_back(category_label(c));
  return inv;
}

LanguageInventory perturb_inventory(const LanguageInventory &base, const std::string &tag,
                                    double jitter, std::uint64_t seed) {
  if (jitter < 0.0) throw std::invalid_argument("jitter must be >= 0");
  LanguageInventory inv = base;
  inv.language_tag = tag;
  Rng rng(derive_seed(seed, "perturb:" + tag));
  for (auto &cat : inv.categories)
    for (auto &v : cat.mean) v += jitter * cat.spread * rng.normal();
  return inv;
}

double min_pairwise_distance(const LanguageInventory &inventory) {
  double best = std::numeric_limits<double>::infinity();
  const auto &cats = inventory.categories;
  for (std::size_t i = 0; i < cats.size(); ++i)
    for (std::size_t j = i + 1; j < cats.size(); ++j)
      best = std::min(best, distance(cats[i].mean, cats[j].mean));
  return best;
}

std::vector<std::size_t> assimilation_map(const LanguageInventory &target,
                                          const LanguageInventory &native) {
  if (target.dim() != native.dim())
    throw DimensionMismatch("inventories " + target.language_tag + " and " +
                            native.language_tag + " differ in dimension");
  std::vector<std::size_t> map(target.size());
  for (std::size_t c = 0; c < target.size(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < native.size(); ++n) {
      double d = distance(target.categories[c].mean, native.categories[n].mean);
      if (d < best) {
        best = d;
        map[c] = n;
      }
    }
  }
  return map;
}

std::vector<SimulatedSentence> sample_sentences(const LanguageInventory &inventory,
                                                std::size_t n_sentences, LengthRange lengths,
                                                std::uint64_t seed,
                                                const std::string &id_prefix) {
  if (n_sentences < 1) throw std::invalid_argument("need at least one sentence");
  if (lengths.min < 1 || lengths.max < lengths.min)
    throw std::invalid_argument("invalid sentence length range");
  const std::string prefix = id_prefix.empty() ? inventory.language_tag : id_prefix;
  Rng rng(derive_seed(seed, "sentences:" + prefix));
  const auto c = static_cast<std::int64_t>(inventory.size());
  std::vector<SimulatedSentence> out;
  out.reserve(n_sentences);
  for (std::size_t s = 0; s < n_sentences; ++s) {
    SimulatedSentence sent;
    char id[32];
    std::snprintf(id, sizeof(id), "_s%04zu", s);
    sent.sentence_id = prefix + id;
    const auto len = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(lengths.min), static_cast<std::int64_t>(lengths.max)));
    std::size_t cur = static_cast<std::size_t>(rng.uniform_int(0, c - 1));
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) {
        const auto &row = inventory.transitions[cur];
        double u = rng.uniform(), cum = 0.0;
        std::size_t next = row.size() - 1;
        for (std::size_t j = 0; j < row.size(); ++j) {
          cum += row[j];
          if (u < cum) {
            next = j;
            break;
          }
        }
        cur = next;
      }
      sent.categories.push_back(cur);
      sent.transcript.push_back(inventory.labels[cur]);
    }
    out.push_back(std::move(sent));
  }
  return out;
}

SynthesizedUtterance synthesize_utterance(const SimulatedSentence &sentence,
                                          const LanguageInventory &target,
                                          const LanguageInventory &speaker,
                                          const AccentSpec &accent,
                                          const std::string &speaker_id,
                                          const std::string &utterance_id,
                                          std::uint64_t utterance_seed) {
  if (!(accent.strength >= 0.0 && accent.strength <= 1.0))
    throw RangeError("accent strength must be in [0,1]");
  if (accent.frames_per_phone.min < 1 ||
      accent.frames_per_phone.max < accent.frames_per_phone.min)
    throw std::invalid_argument("invalid frames_per_phone range");
  const auto native_of = assimilation_map(target, speaker);
  for (std::size_t c : sentence.categories)
    if (c >= target.size())
      throw RangeError(sentence.sentence_id + ": category index out of range");

  // Every phone consumes the same draws (coin, length, frames) regardless
  // of alpha, so alpha = 0 reproduces a native rendition bit for bit.
  Rng rng(derive_seed(accent.seed, utterance_seed));
  const std::size_t dim = target.dim();
  SynthesizedUtterance out;
  std::vector<float> data;
  std::size_t frames = 0;
  for (std::size_t c : sentence.categories) {
    const bool assimilate = rng.uniform() < accent.strength;
    const PhoneCategory &source =
        assimilate ? speaker.categories[native_of[c]] : target.categories[c];
    out.assimilated.push_back(assimilate);
    out.emission_categories.push_back(assimilate ? native_of[c] : c);
    const auto n = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(accent.frames_per_phone.min),
                        static_cast<std::int64_t>(accent.frames_per_phone.max)));
    for (std::size_t f = 0; f < n; ++f) {
      for (std::size_t d = 0; d < dim; ++d)
        data.push_back(static_cast<float>(source.mean[d] + source.spread * rng.normal()));
    }
    frames += n;
  }
  out.features = FeatureMatrix(frames, dim, std::move(data));

  auto &rec = out.record;
  rec.utterance_id = utterance_id;
  rec.speaker_id = speaker_id;
  rec.native_language = speaker.language_tag;
  rec.spoken_language = target.language_tag;
  rec.sentence_id = sentence.sentence_id;
  rec.transcript = sentence.transcript;
  rec.accent_strength = rec.is_native() ? 0.0 : accent.strength;
  rec.feature_path = utterance_id + ".dtkf";
  return out;
}

// ---------------------------------------------------------------------------
// Plans

std::string to_string(SplitRole role) {
  switch (role) {
    case SplitRole::kTokenizerTrain: return "tokenizer_train";
    case SplitRole::kAsrTrain: return "asr_train";
    case SplitRole::kNativeEval: return "native_eval";
    case SplitRole::kAccentedEval: return "accented_eval";
  }
  return "?";
}

SplitRole split_role_from_string(const std::string &s) {
  for (auto r : {SplitRole::kTokenizerTrain, SplitRole::kAsrTrain, SplitRole::kNativeEval,
                 SplitRole::kAccentedEval})
    if (to_string(r) == s) return r;
  throw DataError("unknown split role '" + s + "'");
}

namespace {

using nlohmann::json;

void reject_unknown(const json &j, std::initializer_list<const char *> known,
                    const std::string &where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *k : known) ok = ok || it.key() == k;
    if (!ok) throw DataError(where + ": unknown key '" + it.key() + "'");
  }
}

LengthRange range_from(const json &j, const std::string &what) {
  auto v = j.get<std::vector<std::size_t>>();
  if (v.size() != 2 || v[0] < 1 || v[1] < v[0])
    throw DataError(what + ": expected [min, max] with 1 <= min <= max");
  return {v[0], v[1]};
}

}  // namespace

CorpusPlan corpus_plan_from_json(const std::string &json_text, const std::string &source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw DataError(source + ": " + e.what());
  }
  CorpusPlan p;
  try {
    reject_unknown(j, {"name", "seed", "dim", "categories", "spread", "separation",
                       "frames_per_phone", "target_language", "languages", "sentences",
                       "splits"},
                   source);
    p.name = j.value("name", p.name);
    p.seed = j.value("seed", p.seed);
    p.dim = j.value("dim", p.dim);
    p.categories = j.value("categories", p.categories);
    p.spread = j.value("spread", p.spread);
    p.separation = j.value("separation", p.separation);
    if (j.contains("frames_per_phone"))
      p.frames_per_phone = range_from(j["frames_per_phone"], "frames_per_phone");
    p.target_language = j.value("target_language", p.target_language);
    for (const auto &l : j.at("languages")) {
      reject_unknown(l, {"tag", "perturb_of", "jitter"}, source + ": languages");
      LanguagePlan lp;
      lp.tag = l.at("tag").get<std::string>();
      if (l.contains("perturb_of")) lp.perturb_of = l["perturb_of"].get<std::string>();
      lp.jitter = l.value("jitter", 0.0);
      p.languages.push_back(lp);
    }
    if (j.contains("sentences")) {
      const auto &s = j["sentences"];
      reject_unknown(s, {"count", "length"}, source + ": sentences");
      p.sentence_count = s.value("count", p.sentence_count);
      if (s.contains("length")) p.sentence_length = range_from(s["length"], "sentences.length");
    }
    for (const auto &s : j.at("splits")) {
      reject_unknown(s, {"name", "role", "language", "speakers", "utterances_per_speaker",
                         "alpha", "speaker_prefix"},
                     source + ": splits");
      SplitPlan sp;
      sp.name = s.at("name").get<std::string>();
      sp.role = split_role_from_string(s.at("role").get<std::string>());
      sp.language = s.value("language", std::string());
      sp.speakers = s.value("speakers", sp.speakers);
      sp.utterances_per_speaker = s.value("utterances_per_speaker", sp.utterances_per_speaker);
      if (s.contains("alpha")) {
        auto a = s["alpha"].get<std::vector<double>>();
        if (a.size() != 2) throw DataError(source + ": alpha must be [min, max]");
        sp.alpha_min = a[0];
        sp.alpha_max = a[1];
      }
      sp.speaker_prefix = s.value("speaker_prefix", std::string());
      p.splits.push_back(sp);
    }
  } catch (const json::exception &e) {
    throw DataError(source + ": " + e.what());
  }
  return p;
}

std::string corpus_plan_to_json(const CorpusPlan &p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["seed"] = p.seed;
  j["dim"] = p.dim;
  j["categories"] = p.categories;
  j["spread"] = p.spread;
  j["separation"] = p.separation;
  j["frames_per_phone"] = {p.frames_per_phone.min, p.frames_per_phone.max};
  j["target_language"] = p.target_language;
  j["languages"] = nlohmann::ordered_json::array();
  for (const auto &l : p.languages) {
    nlohmann::ordered_json lj;
    lj["tag"] = l.tag;
    if (l.perturb_of) {
      lj["perturb_of"] = *l.perturb_of;
      lj["jitter"] = l.jitter;
    }
    j["languages"].push_back(lj);
  }
  j["sentences"] = {{"count", p.sentence_count},
                    {"length", {p.sentence_length.min, p.sentence_length.max}}};
  j["splits"] = nlohmann::ordered_json::array();
  for (const auto &s : p.splits) {
    nlohmann::ordered_json sj;
    sj["name"] = s.name;
    sj["role"] = to_string(s.role);
    if (!s.language.empty()) sj["language"] = s.language;
    sj["speakers"] = s.speakers;
    if (s.role == SplitRole::kTokenizerTrain)
      sj["utterances_per_speaker"] = s.utterances_per_speaker;
    if (s.role == SplitRole::kAccentedEval) sj["alpha"] = {s.alpha_min, s.alpha_max};
    if (!s.speaker_prefix.empty()) sj["speaker_prefix"] = s.speaker_prefix;
    j["splits"].push_back(sj);
  }
  return j.dump(2);
}

CorpusPlan default_isib_plan(std::uint64_t seed) {
  CorpusPlan p;
  p.name = "isib";
  p.seed = seed;
  p.languages = {{"T", std::nullopt, 0.0}, {"X", std::nullopt, 0.0}, {"Z", "X", 1.0}};
  auto km = [](const std::string &lang) {
    SplitPlan s;
    s.name = "km_" + lang;
    s.role = SplitRole::kTokenizerTrain;
    s.language = lang;
    s.speakers = 10;
    s.utterances_per_speaker = 30;
    return s;
  };
  p.splits.push_back(km("T"));
  p.splits.push_back(km("X"));
  p.splits.push_back(km("Z"));
  SplitPlan asr{"asr_train", SplitRole::kAsrTrain, "", 4, 0, 0.0, 0.0, ""};
  SplitPlan native{"native_eval", SplitRole::kNativeEval, "", 10, 0, 0.0, 0.0, ""};
  SplitPlan accented{"accented_eval", SplitRole::kAccentedEval, "X", 24, 0, 0.6, 1.0, ""};
  p.splits.push_back(asr);
  p.splits.push_back(native);
  p.splits.push_back(accented);
  return p;
}

const CorpusSplit &SyntheticCorpus::split(const std::string &name) const {
  for (const auto &s : splits)
    if (s.plan.name == name) return s;
  throw DataError("no split named '" + name + "'");
}

const CorpusSplit *SyntheticCorpus::find_role(SplitRole role, const std::string &language) const {
  for (const auto &s : splits)
    if (s.plan.role == role && (language.empty() || s.plan.language == language)) return &s;
  return nullptr;
}

namespace {

struct UtteranceJob {
  const SimulatedSentence *sentence;
  const LanguageInventory *target;
  const LanguageInventory *speaker;
  AccentSpec accent;
  std::string speaker_id;
  std::string utterance_id;
  std::uint64_t seed;
};

}  // namespace

SyntheticCorpus build_corpus(const CorpusPlan &plan, int num_threads) {
  SyntheticCorpus corpus;
  corpus.plan = plan;

  // Inventories: independent languages first, then perturbations.
  for (const auto &l : plan.languages) {
    if (corpus.inventories.count(l.tag)) throw DataError("duplicate language '" + l.tag + "'");
    if (!l.perturb_of)
      corpus.inventories.emplace(l.tag, make_inventory(l.tag, plan.categories, plan.dim,
                                                       plan.separation, plan.seed, plan.spread));
  }
  for (const auto &l : plan.languages) {
    if (!l.perturb_of) continue;
    auto base = corpus.inventories.find(*l.perturb_of);
    if (base == corpus.inventories.end())
      throw DataError("language '" + l.tag + "' perturbs unknown language '" +
                      *l.perturb_of + "'");
    corpus.inventories.emplace(l.tag, perturb_inventory(base->second, l.tag, l.jitter, plan.seed));
  }
  auto inventory = [&](const std::string &tag) -> const LanguageInventory & {
    auto it = corpus.inventories.find(tag);
    if (it == corpus.inventories.end()) throw DataError("plan references undefined language '" + tag + "'");
    return it->second;
  };
  const LanguageInventory &target = inventory(plan.target_language);
  corpus.target_sentences =
      sample_sentences(target, plan.sentence_count, plan.sentence_length, plan.seed);

  std::set<std::string> split_names, prefixes;
  for (const auto &sp : plan.splits) {
    if (!split_names.insert(sp.name).second) throw DataError("duplicate split '" + sp.name + "'");
    const std::string prefix = sp.speaker_prefix.empty() ? sp.name : sp.speaker_prefix;
    if (!prefixes.insert(prefix).second)
      throw DataError("splits share speaker prefix '" + prefix + "'; speakers would overlap");
    if (sp.speakers < 1) throw DataError(sp.name + ": needs at least one speaker");
  }

  for (const auto &sp : plan.splits) {
    const std::string prefix = sp.speaker_prefix.empty() ? sp.name : sp.speaker_prefix;
    const std::uint64_t split_seed = derive_seed(plan.seed, "split:" + sp.name);
    std::vector<SimulatedSentence> own_sentences;
    std::vector<UtteranceJob> jobs;

    const LanguageInventory *spoken = &target;
    const LanguageInventory *native = &target;
    if (sp.role == SplitRole::kTokenizerTrain) {
      spoken = native = &inventory(sp.language);
      if (sp.utterances_per_speaker < 1)
        throw DataError(sp.name + ": utterances_per_speaker must be >= 1");
      own_sentences = sample_sentences(*spoken, sp.speakers * sp.utterances_per_speaker,
                                       plan.sentence_length, split_seed, sp.name);
    } else if (sp.role == SplitRole::kAccentedEval) {
      native = &inventory(sp.language);
      if (!(sp.alpha_min >= 0.0 && sp.alpha_max <= 1.0 && sp.alpha_min <= sp.alpha_max))
        throw DataError(sp.name + ": alpha range must lie in [0,1]");
    }

    for (std::size_t s = 0; s < sp.speakers; ++s) {
      char spk[64];
      std::snprintf(spk, sizeof(spk), "%s_spk%02zu", prefix.c_str(), s);
      const std::uint64_t speaker_seed = derive_seed(split_seed, s);
      AccentSpec accent;
      accent.speaker_native = native->language_tag;
      accent.target = spoken->language_tag;
      accent.frames_per_phone = plan.frames_per_phone;
      accent.seed = speaker_seed;
      if (sp.role == SplitRole::kAccentedEval) {
        Rng alpha_rng(derive_seed(speaker_seed, "alpha"));
        accent.strength = alpha_rng.uniform(sp.alpha_min, sp.alpha_max);
      }
      auto add = [&](const SimulatedSentence &sent, std::uint64_t idx) {
        jobs.push_back({&sent, spoken, native, accent, spk,
                        std::string(spk) + "_" + sent.sentence_id, idx});
      };
      if (sp.role == SplitRole::kTokenizerTrain) {
        for (std::size_t u = 0; u < sp.utterances_per_speaker; ++u)
          add(own_sentences[s * sp.utterances_per_speaker + u], u);
      } else {
        for (std::size_t u = 0; u < corpus.target_sentences.size(); ++u)
          add(corpus.target_sentences[u], u);
      }
    }

    CorpusSplit split;
    split.plan = sp;
    split.manifest.corpus_name = plan.name + "/" + sp.name;
    std::vector<SynthesizedUtterance> made(jobs.size());
    parallel_for(jobs.size(), num_threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto &job = jobs[i];
        made[i] = synthesize_utterance(*job.sentence, *job.target, *job.speaker, job.accent,
                                       job.speaker_id, job.utterance_id, job.seed);
      }
    });
    for (auto &m : made) {
      m.record.feature_path = "feats/" + sp.name + "/" + m.record.utterance_id + ".dtkf";
      split.manifest.records.push_back(std::move(m.record));
      split.features.push_back(std::move(m.features));
    }
    corpus.splits.push_back(std::move(split));
  }
  return corpus;
}

void write_corpus(const SyntheticCorpus &corpus, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  for (const auto &split : corpus.splits) {
    Manifest m = split.manifest;
    m.base_dir = dir;
    for (std::size_t i = 0; i < m.records.size(); ++i)
      write_features(split.features[i], m.resolve(m.records[i]));
    save_manifest(m, dir / (split.plan.name + ".jsonl"));
  }
  internal::write_file_text(dir / "corpus.json", corpus_plan_to_json(corpus.plan) + "\n");
}

SyntheticCorpus read_corpus(const std::filesystem::path &dir) {
  SyntheticCorpus corpus;
  const auto plan_path = dir / "corpus.json";
  corpus.plan = corpus_plan_from_json(internal::read_file_text(plan_path), plan_path.string());
  for (const auto &sp : corpus.plan.splits) {
    CorpusSplit split;
    split.plan = sp;
    split.manifest = load_manifest(dir / (sp.name + ".jsonl"));
    for (const auto &r : split.manifest.records)
      split.features.push_back(read_features(split.manifest.resolve(r)));
    corpus.splits.push_back(std::move(split));
  }
  return corpus;
}

}  // namespace dtk
