#pragma once

#include <stdexcept>
#include <string>

namespace harmlab {

/// Malformed or inconsistent arguments: wrong point kind for a space, t outside [0,1], empty lists.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A chart-based operation was asked to evaluate at (or too near) a pinched coordinate.
class ChartDegenerateError : public std::domain_error {
 public:
  explicit ChartDegenerateError(const std::string& what) : std::domain_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

}  // namespace harmlab
