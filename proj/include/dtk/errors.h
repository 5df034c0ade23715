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

#ifndef DTK_ERRORS_H_
#define DTK_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dtk {

// Anything wrong with the data a user handed us (files, manifests, configs).
// The CLI maps this family to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Binary container errors. Each failure mode has its own type so callers
// (and tests) can tell a corrupted header from a short file.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};
class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};
class NonFiniteError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string &source, std::size_t line, const std::string &what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public DataError {
 public:
  using DataError::DataError;
};

class RangeError : public DataError {
 public:
  using DataError::DataError;
};

// Not enough (distinct) data for the requested operation.
class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace dtk

#endif  // DTK_ERRORS_H_
