#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dmsr/catalog.hpp"
#include "dmsr/data.hpp"
#include "dmsr/layers.hpp"
#include "dmsr/tokenizer.hpp"

namespace dmsr {

// Top-k by popularity, ties by item_id. k > catalog size is a DataError.
std::vector<std::string> baseline_popularity(const std::vector<CatalogItem>& catalog, int k);

/// Okapi BM25 over per-item documents built from display name and metadata
/// text. IDF = ln((N - n_q + 0.5) / (n_q + 0.5) + 1).
class Bm25Index {
 public:
  Bm25Index(const std::vector<CatalogItem>& catalog, double k1 = 1.2, double b = 0.75);

  double score(const std::string& query, const std::string& item_id) const;
  // Top-k by score, ties by item_id.
  std::vector<std::string> top_k(const std::string& query, int k) const;

  static std::string item_document(const CatalogItem& item);

 private:
  double k1_, b_;
  double avg_len_ = 0.0;
  std::vector<std::string> ids_;
  std::vector<std::unordered_map<std::string, int>> term_freq_;
  std::vector<int> doc_len_;
  std::unordered_map<std::string, int> doc_freq_;
  std::unordered_map<std::string, size_t> index_;
};

/// Prompt2Vec: bag-of-tokens sentence embedding -> two dense layers -> item
/// embedding space; retrieval by nearest neighbors. Trained at the item
/// level (metadata text -> phi(item), MSE).
class Prompt2Vec {
 public:
  struct Config {
    int hidden_dim = 4096;
    int epochs = 200;
    float lr = 1e-4f;
    uint64_t seed = 17;
  };

  Prompt2Vec(const PromptTokenizer& tokenizer, int embedding_dim, const Config& cfg);

  void train(const std::vector<CatalogItem>& catalog, const EmbeddingTable& table);
  std::vector<float> embed_prompt(const std::string& prompt) const;
  std::vector<std::string> top_k(const std::string& prompt, const NeighborIndex& index,
                                 int k) const;

 private:
  nn::Tensor bag_of_tokens(const std::string& text) const;

  const PromptTokenizer& tokenizer_;
  Config cfg_;
  nn::ParamRegistry params_;
  nn::Rng rng_;
  std::unique_ptr<nn::Dense> fc1_, fc2_;
};

}  // namespace dmsr
