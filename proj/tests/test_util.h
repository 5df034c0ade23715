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

#ifndef DTK_TESTS_TEST_UTIL_H_
#define DTK_TESTS_TEST_UTIL_H_

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "dtk/accent_sim.h"
#include "dtk/feature_store.h"
#include "dtk/random.h"

namespace testing {

inline dtk::FeatureMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed,
                                        double scale = 1.0) {
  dtk::Rng rng(seed);
  dtk::FeatureMatrix m(n, d);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < d; ++j) m(t, j) = static_cast<float>(scale * rng.normal());
  return m;
}

inline dtk::FeatureMatrix column(const std::vector<float> &values) {
  return dtk::FeatureMatrix(values.size(), 1, values);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("dtk_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// A tiny ISIB plan that runs in well under a second.
inline dtk::CorpusPlan tiny_plan(std::uint64_t seed = 3) {
  dtk::CorpusPlan p;
  p.name = "tiny";
  p.seed = seed;
  p.dim = 4;
  p.categories = 8;
  p.sentence_count = 6;
  p.sentence_length = {3, 5};
  p.languages = {{"T", std::nullopt, 0.0}, {"X", std::nullopt, 0.0}};
  p.splits = {
      {"km_T", dtk::SplitRole::kTokenizerTrain, "T", 3, 10, 0.0, 0.0, ""},
      {"km_X", dtk::SplitRole::kTokenizerTrain, "X", 3, 10, 0.0, 0.0, ""},
      {"asr_train", dtk::SplitRole::kAsrTrain, "", 2, 0, 0.0, 0.0, ""},
      {"native_eval", dtk::SplitRole::kNativeEval, "", 3, 0, 0.0, 0.0, ""},
      {"accented_eval", dtk::SplitRole::kAccentedEval, "X", 4, 0, 0.6, 1.0, ""},
  };
  return p;
}

}  // namespace testing

#endif  // DTK_TESTS_TEST_UTIL_H_
