#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pathfinder {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (vector files, attribute files, rows).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Filter text that does not parse or does not match the schema.
class FilterError : public Error {
 public:
  FilterError(const std::string& what, std::size_t position)
      : Error(what + " (at offset " + std::to_string(position) + ")"), position_(position) {}
  explicit FilterError(const std::string& what) : Error(what) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_ = 0;
};

/// A filter whose every DNF clause is empty; no tuple can satisfy it.
class UnsatisfiableFilter : public FilterError {
 public:
  UnsatisfiableFilter() : FilterError("filter is unsatisfiable") {}
};

/// Index construction failures (bad parameters, impossible splits).
class IndexBuildError : public Error {
 public:
  using Error::Error;
};

}  // namespace pathfinder
