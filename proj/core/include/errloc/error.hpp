#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace errloc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Header/column mismatch between a file or rule and the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A data problem that is not a schema problem (missing required vector, bad value).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed cell in an input file. `row()` is the 1-based data row (header excluded).
class ParseError : public DataError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace errloc
