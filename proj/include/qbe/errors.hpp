#pragma once

#include <stdexcept>
#include <string>

namespace qbe {

// Bad caller-supplied data: out-of-range indices, non-unitary matrices,
// malformed files. CLI maps this to exit code 2.
struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Precondition violations on library operations (operator not a partial
// isometry where one is required, basis invalid, and so on). Also exit 2:
// the caller asked for something the inputs cannot support.
struct validation_error : input_error {
  explicit validation_error(const std::string& msg) : input_error(msg) {}
};

// Post-check or internal consistency failures: these indicate a tolerance
// breakdown or a bug, not bad input. CLI maps to exit code 3.
struct internal_error : std::runtime_error {
  explicit internal_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qbe
