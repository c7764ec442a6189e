#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nstab {

/// Malformed expression text. `position()` is the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Expression evaluation failed (division by zero) at time `t()`.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, double t)
      : std::runtime_error(what + " at t = " + std::to_string(t)), t_(t) {}

  double t() const noexcept { return t_; }

 private:
  double t_;
};

/// Coefficient or lag bounds violate the admissibility conditions.
class BoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed; indicates a bug or corrupted bounds.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Problem configuration could not be read or is incomplete.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nstab
