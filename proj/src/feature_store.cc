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

#include "dtk/feature_store.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "byte_io.h"
#include "dtk/errors.h"
#include "json.hpp"

namespace dtk {

namespace internal {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path &path,
                      std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file_text(const std::filesystem::path &path) {
  auto b = read_file_bytes(path);
  return std::string(b.begin(), b.end());
}

void write_file_text(const std::filesystem::path &path, const std::string &text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t *>(text.data()), text.size()});
}

}  // namespace internal

using internal::ByteReader;
using internal::ByteWriter;

FeatureMatrix::FeatureMatrix(std::size_t n_frames, std::size_t dim, float fill)
    : n_frames_(n_frames), dim_(dim), data_(n_frames * dim, fill) {}

FeatureMatrix::FeatureMatrix(std::size_t n_frames, std::size_t dim,
                             std::vector<float> data)
    : n_frames_(n_frames), dim_(dim), data_(std::move(data)) {
  if (data_.size() != n_frames * dim)
    throw DimensionMismatch("feature data size " + std::to_string(data_.size()) +
                            " != " + std::to_string(n_frames) + "x" +
                            std::to_string(dim));
}

void FeatureMatrix::append_rows(const FeatureMatrix &other) {
  if (other.empty()) return;
  if (empty() && dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_)
    throw DimensionMismatch("cannot append dim " + std::to_string(other.dim_) +
                            " rows to dim " + std::to_string(dim_));
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  n_frames_ += other.n_frames_;
}

void FeatureMatrix::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i]))
      throw NonFiniteError("non-finite value at frame " + std::to_string(i / dim_) +
                           ", dim " + std::to_string(i % dim_));
  }
}

bool FeatureMatrix::operator==(const FeatureMatrix &o) const {
  return n_frames_ == o.n_frames_ && dim_ == o.dim_ &&
         std::memcmp(data_.data(), o.data_.data(), data_.size() * sizeof(float)) == 0;
}

std::vector<std::uint8_t> encode_features(const FeatureMatrix &matrix) {
  if (matrix.n_frames() < 1 || matrix.dim() < 1)
    throw RangeError("feature matrix must have at least one frame and one dim");
  if (matrix.n_frames() > std::numeric_limits<std::uint32_t>::max() ||
      matrix.dim() > std::numeric_limits<std::uint32_t>::max())
    throw RangeError("feature matrix too large for the container");
  matrix.check_finite();
  ByteWriter w;
  w.buffer().reserve(16 + 4 * matrix.data().size());
  w.bytes(kFeatureMagic, 4);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(matrix.n_frames()));
  w.u32(static_cast<std::uint32_t>(matrix.dim()));
  for (float v : matrix.data()) w.f32(v);
  return std::move(w.buffer());
}

FeatureMatrix decode_features(std::span<const std::uint8_t> bytes,
                              const std::string &source) {
  ByteReader r(bytes);
  if (r.remaining() < 4) throw TruncatedError(source + ": file shorter than header");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw BadMagicError(source + ": not a DTKF feature file");
  if (r.remaining() < 12) throw TruncatedError(source + ": truncated header");
  std::uint32_t version = r.u32();
  if (version != kFeatureVersion)
    throw VersionError(source + ": unsupported feature version " +
                       std::to_string(version));
  std::uint64_t n = r.u32(), d = r.u32();
  if (n == 0 || d == 0) throw FormatError(source + ": zero-sized feature matrix");
  if (r.remaining() < n * d * 4)
    throw TruncatedError(source + ": payload has " + std::to_string(r.remaining()) +
                         " bytes, expected " + std::to_string(n * d * 4));
  if (r.remaining() > n * d * 4)
    throw FormatError(source + ": trailing bytes after payload");
  std::vector<float> data(n * d);
  for (auto &v : data) v = r.f32();
  FeatureMatrix m(n, d, std::move(data));
  try {
    m.check_finite();
  } catch (const NonFiniteError &e) {
    throw NonFiniteError(source + ": " + e.what());
  }
  return m;
}

void write_features(const FeatureMatrix &matrix, const std::filesystem::path &path) {
  internal::write_file_bytes(path, encode_features(matrix));
}

FeatureMatrix read_features(const std::filesystem::path &path) {
  return decode_features(internal::read_file_bytes(path), path.string());
}

// ---------------------------------------------------------------------------
// Manifests

const UtteranceRecord *Manifest::find(const std::string &utterance_id) const {
  for (const auto &r : records)
    if (r.utterance_id == utterance_id) return &r;
  return nullptr;
}

std::string record_to_json_line(const UtteranceRecord &r) {
  nlohmann::ordered_json j;
  j["utterance_id"] = r.utterance_id;
  j["speaker_id"] = r.speaker_id;
  j["native_language"] = r.native_language;
  j["spoken_language"] = r.spoken_language;
  j["sentence_id"] = r.sentence_id;
  j["transcript"] = r.transcript;
  j["accent_strength"] = r.accent_strength;
  j["feature_path"] = r.feature_path;
  if (r.ssl_layer) j["ssl_layer"] = *r.ssl_layer;
  if (r.model) j["model"] = *r.model;
  return j.dump();
}

namespace {

const char *const kRequiredFields[] = {
    "utterance_id",    "speaker_id",  "native_language", "spoken_language",
    "sentence_id",     "transcript",  "accent_strength", "feature_path"};

bool is_known_field(const std::string &key) {
  for (const char *f : kRequiredFields)
    if (key == f) return true;
  return key == "ssl_layer" || key == "model";
}

}  // namespace

UtteranceRecord record_from_json_line(const std::string &line, const std::string &source,
                                      std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(source, line_no, "record is not an object");
  for (const char *f : kRequiredFields)
    if (!j.contains(f)) throw ParseError(source, line_no, std::string("missing field '") + f + "'");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!is_known_field(it.key()))
      throw ParseError(source, line_no, "unknown field '" + it.key() + "'");

  UtteranceRecord r;
  try {
    r.utterance_id = j.at("utterance_id").get<std::string>();
    r.speaker_id = j.at("speaker_id").get<std::string>();
    r.native_language = j.at("native_language").get<std::string>();
    r.spoken_language = j.at("spoken_language").get<std::string>();
    r.sentence_id = j.at("sentence_id").get<std::string>();
    r.transcript = j.at("transcript").get<std::vector<std::string>>();
    r.accent_strength = j.at("accent_strength").get<double>();
    r.feature_path = j.at("feature_path").get<std::string>();
    if (j.contains("ssl_layer")) r.ssl_layer = j.at("ssl_layer").get<int>();
    if (j.contains("model")) r.model = j.at("model").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(source, line_no, std::string("bad field type: ") + e.what());
  }
  if (r.utterance_id.empty()) throw ParseError(source, line_no, "empty utterance_id");
  if (!(r.accent_strength >= 0.0 && r.accent_strength <= 1.0))
    throw RangeError(source + ":" + std::to_string(line_no) + ": accent_strength " +
                     std::to_string(r.accent_strength) + " outside [0,1]");
  if (r.is_native() && r.accent_strength != 0.0)
    throw RangeError(source + ":" + std::to_string(line_no) +
                     ": native speaker with nonzero accent_strength");
  return r;
}

Manifest load_manifest(const std::filesystem::path &path) {
  std::istringstream in(internal::read_file_text(path));
  Manifest m;
  m.corpus_name = path.stem().string();
  m.base_dir = path.parent_path();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto rec = record_from_json_line(line, path.string(), line_no);
    if (!seen.insert(rec.utterance_id).second)
      throw DuplicateIdError(path.string() + ":" + std::to_string(line_no) +
                             ": duplicate utterance_id '" + rec.utterance_id + "'");
    m.records.push_back(std::move(rec));
  }
  return m;
}

void save_manifest(const Manifest &manifest, const std::filesystem::path &path) {
  std::string text;
  for (const auto &r : manifest.records) {
    text += record_to_json_line(r);
    text += '\n';
  }
  internal::write_file_text(path, text);
}

std::size_t validate_manifest_features(const Manifest &manifest) {
  std::size_t dim = 0;
  for (const auto &r : manifest.records) {
    auto m = read_features(manifest.resolve(r));
    if (dim == 0) dim = m.dim();
    else if (m.dim() != dim)
      throw DimensionMismatch(r.utterance_id + ": dim " + std::to_string(m.dim()) +
                              " differs from manifest dim " + std::to_string(dim));
  }
  return dim;
}

}  // namespace dtk
