#pragma once

#include <stdexcept>
#include <string>

namespace humorkit {

/// Malformed or inconsistent input data (files, schemas, validation).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Degenerate or non-finite numeric input, or a failed numeric procedure.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace humorkit
