#pragma once

#include <stdexcept>
#include <string>

namespace cptt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched grids, orders, or vector lengths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A requested dense materialization exceeds the configured element cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite data or a numerical breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range arguments (ranks, counts, tolerances).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files. `kind()` separates syntax/schema problems from
/// documents that parse but carry non-finite values.
class ParseError : public Error {
 public:
  enum class Kind { Syntax, Schema, NonFinite };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace cptt
