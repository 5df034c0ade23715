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

#ifndef DTK_FEATURE_STORE_H_
#define DTK_FEATURE_STORE_H_

// Binary feature container (.dtkf), all integers and reals little-endian:
//
//   offset  size  field
//   0       4     magic "DTKF"
//   4       4     uint32 version (= 1)
//   8       4     uint32 n_frames (>= 1)
//   12      4     uint32 dim (>= 1)
//   16      4*n*d float32 values, row-major (frame by frame)
//
// Manifests are JSON Lines, one UtteranceRecord object per line. See
// docs/formats.md for the full field list.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dtk {

inline constexpr char kFeatureMagic[4] = {'D', 'T', 'K', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;

// T x D matrix of SSL activations for one utterance, row-major.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_frames, std::size_t dim, float fill = 0.0f);
  FeatureMatrix(std::size_t n_frames, std::size_t dim, std::vector<float> data);

  std::size_t n_frames() const { return n_frames_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return n_frames_ == 0; }

  std::span<const float> row(std::size_t t) const {
    return {data_.data() + t * dim_, dim_};
  }
  std::span<float> row(std::size_t t) { return {data_.data() + t * dim_, dim_}; }
  float operator()(std::size_t t, std::size_t d) const { return data_[t * dim_ + d]; }
  float &operator()(std::size_t t, std::size_t d) { return data_[t * dim_ + d]; }

  const std::vector<float> &data() const { return data_; }

  void append_rows(const FeatureMatrix &other);

  // Throws NonFiniteError on the first NaN/Inf.
  void check_finite() const;

  bool operator==(const FeatureMatrix &o) const;

 private:
  std::size_t n_frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

void write_features(const FeatureMatrix &matrix, const std::filesystem::path &path);
FeatureMatrix read_features(const std::filesystem::path &path);

// In-memory forms of the same encoding.
std::vector<std::uint8_t> encode_features(const FeatureMatrix &matrix);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes,
                              const std::string &source = "<memory>");

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string native_language;
  std::string spoken_language;
  std::string sentence_id;
  std::vector<std::string> transcript;
  double accent_strength = 0.0;
  std::string feature_path;
  // Provenance written by feature extractors; absent for synthetic data.
  std::optional<int> ssl_layer;
  std::optional<std::string> model;

  bool is_native() const { return native_language == spoken_language; }
  bool operator==(const UtteranceRecord &) const = default;
};

struct Manifest {
  std::string corpus_name;
  std::vector<UtteranceRecord> records;
  // Directory that relative feature paths resolve against.
  std::filesystem::path base_dir;

  std::size_t size() const { return records.size(); }
  const UtteranceRecord *find(const std::string &utterance_id) const;
  std::filesystem::path resolve(const UtteranceRecord &r) const {
    return base_dir / r.feature_path;
  }
};

// Throws ParseError (with line number), DuplicateIdError or RangeError.
Manifest load_manifest(const std::filesystem::path &path);
void save_manifest(const Manifest &manifest, const std::filesystem::path &path);

std::string record_to_json_line(const UtteranceRecord &record);
UtteranceRecord record_from_json_line(const std::string &line,
                                      const std::string &source = "<memory>",
                                      std::size_t line_no = 1);

// Loads every referenced feature file and checks the common dim.
// Returns that dim (0 for an empty manifest).
std::size_t validate_manifest_features(const Manifest &manifest);

}  // namespace dtk

#endif  // DTK_FEATURE_STORE_H_
