#include "dmsr/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dmsr/errors.hpp"

namespace dmsr {

namespace {

std::vector<float> normalized(const std::vector<float>& vec) {
  float n = nn::l2_norm(vec.data(), static_cast<int>(vec.size()));
  if (n == 0.0f) throw DataError("cannot insert a zero embedding vector");
  // idempotent at float precision, so reloading a saved table is bitwise
  // stable
  if (std::abs(n - 1.0f) <= 1e-6f) return vec;
  std::vector<float> out(vec.size());
  for (size_t i = 0; i < vec.size(); ++i) out[i] = vec[i] / n;
  return out;
}

}  // namespace

float cosine_similarity(const float* a, const float* b, int n) {
  float na = nn::l2_norm(a, n);
  float nb = nn::l2_norm(b, n);
  if (na == 0.0f || nb == 0.0f) return 0.0f;
  return nn::dot(a, b, n) / (na * nb);
}

const float* EmbeddingTable::vector(const std::string& id) const {
  if (id == kPadId) {
    if (pad_vector_.empty()) const_cast<EmbeddingTable*>(this)->pad_vector_.assign(dim_, 0.0f);
    return pad_vector_.data();
  }
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown item id: " + id);
  return vectors_[it->second].data();
}

void EmbeddingTable::insert(const std::string& id, const std::vector<float>& vec) {
  if (id == kPadId) throw DataError("pad id is reserved");
  if (static_cast<int>(vec.size()) != dim_)
    throw ConfigError("embedding dim mismatch for " + id + ": expected " +
                      std::to_string(dim_) + ", got " + std::to_string(vec.size()));
  if (index_.count(id)) throw DataError("duplicate item id: " + id);
  std::vector<float> unit = normalized(vec);  // may throw; keep state intact
  index_[id] = ids_.size();
  ids_.push_back(id);
  vectors_.push_back(std::move(unit));
}

void EmbeddingTable::remove(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("cannot remove unknown item id: " + id);
  size_t pos = it->second;
  size_t last = ids_.size() - 1;
  if (pos != last) {
    ids_[pos] = std::move(ids_[last]);
    vectors_[pos] = std::move(vectors_[last]);
    index_[ids_[pos]] = pos;
  }
  ids_.pop_back();
  vectors_.pop_back();
  index_.erase(it);
}

namespace {

constexpr char kMagic[4] = {'D', 'M', 'S', 'E'};
constexpr uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write embedding file: " + path);
  os.write(kMagic, 4);
  write_le<uint16_t>(os, kVersion);
  write_le<uint32_t>(os, static_cast<uint32_t>(dim_));
  write_le<uint32_t>(os, static_cast<uint32_t>(ids_.size()));
  // sorted order keeps the file byte-deterministic
  std::vector<size_t> order(ids_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [this](size_t a, size_t b) { return ids_[a] < ids_[b]; });
  for (size_t i : order) {
    write_le<uint16_t>(os, static_cast<uint16_t>(ids_[i].size()));
    os.write(ids_[i].data(), static_cast<std::streamsize>(ids_[i].size()));
    os.write(reinterpret_cast<const char*>(vectors_[i].data()),
             static_cast<std::streamsize>(sizeof(float) * dim_));
  }
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open embedding file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad magic in embedding file: " + path);
  uint16_t version = read_le<uint16_t>(is);
  if (version != kVersion)
    throw DataError("unsupported embedding file version " + std::to_string(version));
  int dim = static_cast<int>(read_le<uint32_t>(is));
  uint32_t count = read_le<uint32_t>(is);
  EmbeddingTable table(dim);
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t len = read_le<uint16_t>(is);
    std::string id(len, '\0');
    is.read(id.data(), len);
    std::vector<float> vec(dim);
    is.read(reinterpret_cast<char*>(vec.data()),
            static_cast<std::streamsize>(sizeof(float) * dim));
    if (!is) throw DataError("truncated embedding file: " + path);
    table.insert(id, vec);
  }
  return table;
}

NeighborIndex::NeighborIndex(const EmbeddingTable& table)
    : dim_(table.dim_), ids_(table.ids_), vectors_(table.vectors_), index_(table.index_) {}

std::vector<Neighbor> NeighborIndex::nearest(const float* query, int k,
                                             const std::set<std::string>& exclude) const {
  float qn = nn::l2_norm(query, dim_);
  std::vector<Neighbor> all;
  all.reserve(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (exclude.count(ids_[i])) continue;
    float sim = qn == 0.0f ? 0.0f : nn::dot(query, vectors_[i].data(), dim_) / qn;
    all.push_back({ids_[i], 1.0f - sim});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.item_id < b.item_id;
  });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  return all;
}

void NeighborIndex::add_item(const std::string& id, const std::vector<float>& vec) {
  if (id == kPadId) throw DataError("pad id is reserved");
  if (static_cast<int>(vec.size()) != dim_)
    throw ConfigError("add_item: dim mismatch for " + id);
  if (index_.count(id)) throw DataError("add_item: duplicate item id: " + id);
  std::vector<float> unit = normalized(vec);
  index_[id] = ids_.size();
  ids_.push_back(id);
  vectors_.push_back(std::move(unit));
}

void NeighborIndex::remove_item(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("remove_item: unknown item id: " + id);
  size_t pos = it->second;
  size_t last = ids_.size() - 1;
  if (pos != last) {
    ids_[pos] = std::move(ids_[last]);
    vectors_[pos] = std::move(vectors_[last]);
    index_[ids_[pos]] = pos;
  }
  ids_.pop_back();
  vectors_.pop_back();
  index_.erase(it);
}

const float* NeighborIndex::vector(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown item id: " + id);
  return vectors_[it->second].data();
}

}  // namespace dmsr
