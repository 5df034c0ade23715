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

#ifndef DTK_SRC_BYTE_IO_H_
#define DTK_SRC_BYTE_IO_H_

// Little-endian packing shared by the binary containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dtk::internal {

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = (out << 8) | (v & 0xff);
      v >>= 8;
    }
    return out;
  } else {
    return v;
  }
}

class ByteWriter {
 public:
  void bytes(const void *p, std::size_t n) {
    auto *b = static_cast<const std::uint8_t *>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    v = to_little(v);
    bytes(&v, 4);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) {
    auto u = to_little(std::bit_cast<std::uint64_t>(v));
    bytes(&u, 8);
  }
  std::vector<std::uint8_t> &buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds are checked by the caller via remaining().
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void raw(void *out, std::size_t n) {
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return to_little(v);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() {
    std::uint64_t v;
    raw(&v, 8);
    return std::bit_cast<double>(to_little(v));
  }
  std::span<const std::uint8_t> rest() const { return data_.subspan(pos_); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);
void write_file_bytes(const std::filesystem::path &path,
                      std::span<const std::uint8_t> bytes);
std::string read_file_text(const std::filesystem::path &path);
void write_file_text(const std::filesystem::path &path, const std::string &text);

}  // namespace dtk::internal

#endif  // DTK_SRC_BYTE_IO_H_
