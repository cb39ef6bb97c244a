#include "dmsr/pipeline.hpp"

#include <algorithm>
#include <random>

#include "dmsr/errors.hpp"

namespace dmsr {

PostProcess post_process_from_string(const std::string& s) {
  if (s == "none") return PostProcess::kNone;
  if (s == "centroid") return PostProcess::kCentroidSort;
  if (s == "shuffle") return PostProcess::kRandomShuffle;
  throw ConfigError("unknown post-process: " + s + " (expected none|centroid|shuffle)");
}

std::string to_string(PostProcess p) {
  switch (p) {
    case PostProcess::kNone: return "none";
    case PostProcess::kCentroidSort: return "centroid";
    case PostProcess::kRandomShuffle: return "shuffle";
  }
  return "?";
}

uint64_t derive_run_seed(uint64_t seed, int run_index) {
  uint64_t x = seed + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(run_index + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  return x;
}

GeneratedSlate generate(const std::string& prompt, const GenerationConfig& config,
                        const ModelBundle& bundle, int run_index,
                        const std::set<std::string>& session_exclude) {
  if (config.steps < 1) throw ConfigError("generate: steps must be >= 1");
  SampleOptions opts;
  opts.steps = config.steps;
  opts.seed = derive_run_seed(config.seed, run_index);
  opts.posterior_noise = config.posterior_noise;
  GeneratedSlate out;
  out.prompt = prompt;
  out.run_index = run_index;
  out.latent = sample_latent(bundle.model, prompt, opts);
  out.items = round_latent(out.latent, bundle.index, config.dedup, session_exclude);
  switch (config.post_process) {
    case PostProcess::kNone: break;
    case PostProcess::kCentroidSort: out = centroid_sort(std::move(out), bundle.table); break;
    case PostProcess::kRandomShuffle: out = random_shuffle(std::move(out), opts.seed); break;
  }
  return out;
}

GeneratedSlate centroid_sort(GeneratedSlate slate, const EmbeddingTable& table) {
  if (slate.items.empty()) throw DataError("centroid_sort: empty slate");
  int d = table.dim();
  std::vector<float> centroid(d, 0.0f);
  for (const std::string& id : slate.items) {
    const float* v = table.vector(id);
    for (int k = 0; k < d; ++k) centroid[k] += v[k];
  }
  for (float& c : centroid) c /= static_cast<float>(slate.items.size());
  std::stable_sort(slate.items.begin(), slate.items.end(),
                   [&](const std::string& a, const std::string& b) {
                     float da = 1.0f - cosine_similarity(table.vector(a), centroid.data(), d);
                     float db = 1.0f - cosine_similarity(table.vector(b), centroid.data(), d);
                     if (da != db) return da < db;
                     return a < b;
                   });
  return slate;
}

GeneratedSlate random_shuffle(GeneratedSlate slate, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(slate.items.begin(), slate.items.end(), rng);
  return slate;
}

}  // namespace dmsr
