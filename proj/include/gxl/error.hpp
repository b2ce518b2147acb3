// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <stdexcept>
#include <string>

namespace gxl {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: usage/dimension errors -> 1, format/data errors -> 2, numeric -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public UsageError {
 public:
  using UsageError::UsageError;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gxl
