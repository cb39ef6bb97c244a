#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmsr/data.hpp"
#include "dmsr/tensor.hpp"

namespace dmsr {

/// Fixed item encoding phi: item_id -> unit vector in R^d. The pad id maps
/// to the zero vector and is never returned by nearest-neighbor queries.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  // Pointer to the d floats for `id`; pad id yields the zero vector.
  const float* vector(const std::string& id) const;

  // L2-normalizes then stores; duplicate id is a DataError.
  void insert(const std::string& id, const std::vector<float>& vec);
  void remove(const std::string& id);

  void save(const std::string& path) const;
  static EmbeddingTable load(const std::string& path);

 private:
  int dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::vector<float>> vectors_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<float> pad_vector_;

  friend class NeighborIndex;
};

struct Neighbor {
  std::string item_id;
  float distance;  // cosine distance, 1 - cos_sim
};

/// Exact nearest-neighbor search over an EmbeddingTable snapshot under
/// cosine distance. Supports catalog mutation at query time without
/// touching any trained model. Ties break by lexicographic item_id.
class NeighborIndex {
 public:
  explicit NeighborIndex(const EmbeddingTable& table);

  std::vector<Neighbor> nearest(const float* query, int k,
                                const std::set<std::string>& exclude = {}) const;

  void add_item(const std::string& id, const std::vector<float>& vec);
  void remove_item(const std::string& id);

  int dim() const { return dim_; }
  size_t size() const { return ids_.size(); }
  const float* vector(const std::string& id) const;

 private:
  int dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::vector<float>> vectors_;  // unit vectors
  std::unordered_map<std::string, size_t> index_;
};

float cosine_similarity(const float* a, const float* b, int n);

}  // namespace dmsr
