#pragma once

#include <stdexcept>
#include <string>

namespace ugrec {

/// Base class for runtime failures raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration or usage (CLI exit code 1).
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
struct DataError : Error {
  using Error::Error;
};

/// Parse failure carrying the 1-based line number of the offending line.
struct ParseError : DataError {
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_number(line) {}
  std::size_t line_number;
};

/// Non-finite values, degenerate normals and other numeric breakdowns
/// (CLI exit code 3).
struct NumericalError : Error {
  using Error::Error;
};

/// Violated precondition; a programming error, not an input error.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}
}  // namespace detail

}  // namespace ugrec
