#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semcast {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between a network/layer and the data handed to it.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// backward() called with a cache that does not belong to (spec, params).
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

// A loss, gradient or ratio went NaN/inf. `step` is the step index within
// the loop that produced it.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (IDX, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Runtime KKT check failed; the message carries the full direction bundle.
class KktViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace semcast
