#pragma once

#include <stdexcept>
#include <string>

namespace dmsr {

// Bad shapes, bad hyperparameters, unknown config keys.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files, unknown item ids, infeasible dataset specs.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse (backward without forward, double backward) and numeric
// failures (non-finite activations or gradients).
struct StateError : std::runtime_error {
  explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dmsr
