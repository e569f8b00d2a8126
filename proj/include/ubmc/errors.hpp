#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ubmc {

/// A parameter or configuration breaks a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A level difference or model evaluation produced NaN or infinity.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::size_t level)
      : std::runtime_error(what + " (level " + std::to_string(level) + ")"), level_(level) {}
  [[nodiscard]] std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace ubmc
