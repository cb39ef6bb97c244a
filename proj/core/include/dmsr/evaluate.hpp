#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dmsr/metrics.hpp"
#include "dmsr/pipeline.hpp"

namespace dmsr {

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct MetricReport {
  int k = 0;
  // prompt (slate_id) -> metric name -> per-prompt value (mean over runs)
  std::map<std::string, std::map<std::string, double>> per_prompt;
  std::map<std::string, MetricStats> aggregate;

  void write_csv(const std::string& path) const;
  static MetricReport read_csv(const std::string& path);
};

/// Produces `runs` generated slates for one reference prompt. run_index is
/// passed so stochastic generators can derive distinct sub-seeds.
using SlateGenerator =
    std::function<std::vector<std::vector<std::string>>(const Slate& reference, int runs)>;

struct EvalConfig {
  int k = 30;
  int samples_per_prompt = 5;
};

// The two-level protocol: per prompt, metrics averaged over
// samples_per_prompt runs; then mean and standard deviation across prompts.
MetricReport evaluate(const SlateGenerator& generator, const std::vector<Slate>& test,
                      const EmbeddingTable& table, const std::vector<CatalogItem>& catalog,
                      const EvalConfig& config);

// Ready-made generators.
SlateGenerator dmsr_generator(const ModelBundle& bundle, const GenerationConfig& config);
SlateGenerator fixed_slate_generator(std::vector<std::string> slate);  // e.g. popularity
SlateGenerator oracle_generator();  // echoes the reference (metrics sanity)

struct BenchRow {
  std::string method;
  std::map<std::string, MetricStats> metrics;
};

struct BenchReport {
  int k = 0;
  std::vector<BenchRow> rows;
  std::string render_table() const;
  void write_csv(const std::string& path) const;
};

void write_freshness_csv(const FreshnessResult& result, const std::string& path);
void write_exposure_csv(const std::vector<ExposureBucket>& buckets, const std::string& path);

}  // namespace dmsr
