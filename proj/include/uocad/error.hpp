#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uocad {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input sequence or dataset was too short or empty.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of its legal domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shapes or state layouts do not agree.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (CSV header/rows, config or model files).
class SchemaError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Two labeled anomaly ranges would overlap.
class ConflictError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A loss or prediction became non-finite. `where` is the epoch during
/// training and the stream index during detection.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t where)
      : Error(what), where_(where) {}

  std::size_t where() const noexcept { return where_; }

 private:
  std::size_t where_;
};

/// Every Hyperband trial failed.
class TuningFailedError : public Error {
 public:
  using Error::Error;
};

}  // namespace uocad
