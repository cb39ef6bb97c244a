#pragma once

#include <map>
#include <string>
#include <vector>

#include "dmsr/catalog.hpp"
#include "dmsr/data.hpp"

namespace dmsr {

/// Per-position relevance: 1 for an exact reference hit, else the cosine
/// similarity to the positionally corresponding reference item, clamped to
/// [0, 1]. Generated positions beyond the reference's true length pair
/// against the reference's last real item.
std::vector<float> similarity_scores(const std::vector<std::string>& generated,
                                     const Slate& reference, const EmbeddingTable& table,
                                     int k);

// DCG with gains s_i and the ideal slate (all gains 1) as normalizer.
float ndcg_sim(const std::vector<std::string>& generated, const Slate& reference,
               const EmbeddingTable& table, int k);

// Graded AP@k: mean over positions of the running mean similarity.
float map_sim(const std::vector<std::string>& generated, const Slate& reference,
              const EmbeddingTable& table, int k);

// Greedy max-cosine matching F1 over item embeddings (BertScore-style),
// clamped to [0, 1].
float embed_score(const std::vector<std::string>& generated, const Slate& reference,
                  const EmbeddingTable& table);

// Cosine similarity of frequency-weighted category count vectors over the
// top-k of each slate. 0 (with no categories anywhere) is well defined.
float category_sim(const std::vector<std::string>& generated, const Slate& reference,
                   const std::vector<CatalogItem>& catalog, int k);

struct FreshnessResult {
  // grid[run][position]: 1 if the item was absent from every earlier run
  std::vector<std::vector<int>> grid;
  std::vector<float> per_run_ratio;
};

FreshnessResult freshness(const std::vector<std::vector<std::string>>& runs);

struct ExposureBucket {
  long pop_lo = 0;  // inclusive
  long pop_hi = 0;  // exclusive
  double generated_share = 0.0;
  double reference_share = 0.0;
  bool ratio_defined = false;
  double ratio = 0.0;
};

// Log-spaced popularity buckets; per bucket the ratio of generated
// occurrence share to reference occurrence share. Buckets with an empty
// reference share have ratio_defined == false.
std::vector<ExposureBucket> popularity_exposure(
    const std::vector<std::vector<std::string>>& generated,
    const std::vector<std::vector<std::string>>& reference,
    const std::vector<CatalogItem>& catalog);

}  // namespace dmsr
