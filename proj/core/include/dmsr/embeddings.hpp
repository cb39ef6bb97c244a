#pragma once

#include <set>
#include <string>
#include <vector>

#include "dmsr/catalog.hpp"
#include "dmsr/data.hpp"
#include "dmsr/tensor.hpp"

namespace dmsr {

/// Trains the fixed encoding phi: positive pointwise mutual information
/// over item-in-slate co-occurrence, truncated eigendecomposition to `dim`,
/// rows L2-normalized. Deterministic; every catalog item must appear in at
/// least one slate.
EmbeddingTable train_embeddings(const std::vector<CatalogItem>& catalog,
                                const std::vector<Slate>& slates, int dim);

// Stacks phi(w_i) row-wise; pad positions become zero rows.
nn::Tensor encode_slate(const Slate& slate, const EmbeddingTable& table);

// Row-wise nearest catalog item under cosine distance. With dedup, each id
// appears at most once: positions resolve left-to-right and a taken id is
// masked so the next-closest unused item is picked. `session_exclude` is
// applied on top (never returned at all).
std::vector<std::string> round_latent(const nn::Tensor& latent, const NeighborIndex& index,
                                      bool dedup,
                                      const std::set<std::string>& session_exclude = {});

}  // namespace dmsr
