// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input that cannot be turned into typed records.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// `@` delimiters that do not pair up; `offset` is the byte offset of the
/// unmatched sign.
class DelimiterError : public Error {
 public:
  DelimiterError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ExportError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Raised by scorer backends; the probe harness records the affected probe
/// as unscored.
class ScoringError : public Error {
 public:
  using Error::Error;
};

}  // namespace crs
