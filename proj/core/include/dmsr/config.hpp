#pragma once

#include <map>
#include <string>
#include <vector>

#include "dmsr/diffusion.hpp"
#include "dmsr/pipeline.hpp"

namespace dmsr {

inline const std::string kVersionString = "dmsr 0.1.0";

/// Flat dotted-key configuration. Every key has a default; unknown keys are
/// rejected up front. File format: `key = value` lines, `#` comments.
class ExperimentConfig {
 public:
  ExperimentConfig();

  static ExperimentConfig from_file(const std::string& path);
  // CLI overrides: applied after the file, same key space.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  uint64_t get_seed(const std::string& key) const;

  // Cross-field checks (head dims, group divisibility, ranges). Throws
  // ConfigError before any work starts.
  void validate() const;

  ModelConfig model_config() const;
  GenerationConfig generation_config() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Everything needed to reproduce a run: resolved config, code version,
/// output hashes, timings. Written atomically at run end.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::string version = kVersionString;
  std::map<std::string, std::string> output_hashes;  // path -> fnv64
  std::vector<std::string> report_paths;
  std::map<std::string, double> timings_seconds;

  void write(const std::string& path) const;
};

}  // namespace dmsr
