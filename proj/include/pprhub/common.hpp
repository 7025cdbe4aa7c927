#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pprhub {

inline constexpr const char* kVersion = "0.1.0";

using NodeId = std::uint32_t;

/// Invalid inputs, malformed files, unsatisfiable configuration.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failures at runtime (non-convergence, resource caps).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Branching-process growth exceeded the configured node cap.
class TreeExplodedError : public NumericError {
 public:
  explicit TreeExplodedError(const std::string& msg) : NumericError(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace pprhub
