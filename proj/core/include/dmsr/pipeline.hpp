#pragma once

#include <set>
#include <string>
#include <vector>

#include "dmsr/diffusion.hpp"
#include "dmsr/embeddings.hpp"

namespace dmsr {

enum class PostProcess { kNone, kCentroidSort, kRandomShuffle };

PostProcess post_process_from_string(const std::string& s);
std::string to_string(PostProcess p);

struct GenerationConfig {
  int steps = 8;
  uint64_t seed = 0;
  bool dedup = true;
  bool posterior_noise = false;
  PostProcess post_process = PostProcess::kNone;
  int samples_per_prompt = 5;
};

struct GeneratedSlate {
  std::vector<std::string> items;
  std::string prompt;
  int run_index = 0;
  nn::Tensor latent;  // pre-rounding x_0, kept for metrics
};

/// Read-only view over everything generation needs.
struct ModelBundle {
  const DiffusionModel& model;
  const EmbeddingTable& table;
  const NeighborIndex& index;
};

// Deterministic sub-seed for (seed, run_index).
uint64_t derive_run_seed(uint64_t seed, int run_index);

// tau -> sample -> round -> post-process. Pure function of
// (prompt, config, run_index, bundle). `session_exclude` supports
// same-session dedup across runs.
GeneratedSlate generate(const std::string& prompt, const GenerationConfig& config,
                        const ModelBundle& bundle, int run_index = 0,
                        const std::set<std::string>& session_exclude = {});

// Reorders ascending by cosine distance to the slate's embedding centroid;
// ties break by item_id. Idempotent, multiset-preserving.
GeneratedSlate centroid_sort(GeneratedSlate slate, const EmbeddingTable& table);

GeneratedSlate random_shuffle(GeneratedSlate slate, uint64_t seed);

}  // namespace dmsr
