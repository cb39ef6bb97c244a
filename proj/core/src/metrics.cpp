#include "dmsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "dmsr/errors.hpp"

namespace dmsr {

std::vector<float> similarity_scores(const std::vector<std::string>& generated,
                                     const Slate& reference, const EmbeddingTable& table,
                                     int k) {
  if (reference.true_length < 1) throw DataError("similarity_scores: empty reference");
  std::unordered_set<std::string> ref_set(reference.items.begin(),
                                          reference.items.begin() + reference.true_length);
  int count = std::min<int>(k, static_cast<int>(generated.size()));
  std::vector<float> s(count);
  for (int i = 0; i < count; ++i) {
    if (generated[i] == kPadId) {
      s[i] = 0.0f;
      continue;
    }
    if (ref_set.count(generated[i])) {
      s[i] = 1.0f;
      continue;
    }
    int ref_pos = std::min(i, reference.true_length - 1);
    float sim = cosine_similarity(table.vector(generated[i]),
                                  table.vector(reference.items[ref_pos]), table.dim());
    s[i] = std::clamp(sim, 0.0f, 1.0f);
  }
  return s;
}

float ndcg_sim(const std::vector<std::string>& generated, const Slate& reference,
               const EmbeddingTable& table, int k) {
  std::vector<float> s = similarity_scores(generated, reference, table, k);
  double dcg = 0.0, idcg = 0.0;
  for (int i = 0; i < k; ++i) {
    double disc = 1.0 / std::log2(static_cast<double>(i) + 2.0);
    if (i < static_cast<int>(s.size())) dcg += s[i] * disc;
    idcg += disc;
  }
  return static_cast<float>(dcg / idcg);
}

float map_sim(const std::vector<std::string>& generated, const Slate& reference,
              const EmbeddingTable& table, int k) {
  std::vector<float> s = similarity_scores(generated, reference, table, k);
  double total = 0.0, prefix = 0.0;
  for (int i = 0; i < k; ++i) {
    if (i < static_cast<int>(s.size())) prefix += s[i];
    total += prefix / (static_cast<double>(i) + 1.0);
  }
  return static_cast<float>(total / k);
}

namespace {

std::vector<std::string> real_items(const Slate& s) {
  return {s.items.begin(), s.items.begin() + s.true_length};
}

double max_cos_to_any(const std::string& id, const std::vector<std::string>& others,
                      const EmbeddingTable& table) {
  double best = -1.0;
  for (const std::string& o : others)
    best = std::max(best,
                    static_cast<double>(cosine_similarity(table.vector(id), table.vector(o),
                                                          table.dim())));
  return best;
}

}  // namespace

float embed_score(const std::vector<std::string>& generated, const Slate& reference,
                  const EmbeddingTable& table) {
  std::vector<std::string> gen;
  for (const std::string& id : generated)
    if (id != kPadId) gen.push_back(id);
  std::vector<std::string> ref = real_items(reference);
  if (gen.empty() || ref.empty()) throw DataError("embed_score: empty slate");
  double precision = 0.0;
  for (const std::string& g : gen) precision += max_cos_to_any(g, ref, table);
  precision /= static_cast<double>(gen.size());
  double recall = 0.0;
  for (const std::string& r : ref) recall += max_cos_to_any(r, gen, table);
  recall /= static_cast<double>(ref.size());
  precision = std::clamp(precision, 0.0, 1.0);
  recall = std::clamp(recall, 0.0, 1.0);
  if (precision + recall == 0.0) return 0.0f;
  return static_cast<float>(2.0 * precision * recall / (precision + recall));
}

namespace {

std::unordered_map<std::string, double> category_counts(
    const std::vector<std::string>& items, int k,
    const std::unordered_map<std::string, const CatalogItem*>& by_id) {
  std::unordered_map<std::string, double> counts;
  int limit = std::min<int>(k, static_cast<int>(items.size()));
  for (int i = 0; i < limit; ++i) {
    if (items[i] == kPadId) continue;
    auto it = by_id.find(items[i]);
    if (it == by_id.end()) continue;
    auto mit = it->second->metadata.find("categories");
    if (mit == it->second->metadata.end()) continue;
    for (const std::string& cat : mit->second) counts[cat] += 1.0;
  }
  return counts;
}

}  // namespace

float category_sim(const std::vector<std::string>& generated, const Slate& reference,
                   const std::vector<CatalogItem>& catalog, int k) {
  std::unordered_map<std::string, const CatalogItem*> by_id;
  for (const CatalogItem& c : catalog) by_id[c.item_id] = &c;
  auto gc = category_counts(generated, k, by_id);
  auto rc = category_counts(real_items(reference), k, by_id);
  if (gc.empty() || rc.empty()) return 0.0f;
  double dot = 0.0, gn = 0.0, rn = 0.0;
  for (const auto& [cat, n] : gc) {
    gn += n * n;
    auto it = rc.find(cat);
    if (it != rc.end()) dot += n * it->second;
  }
  for (const auto& [cat, n] : rc) rn += n * n;
  return static_cast<float>(dot / (std::sqrt(gn) * std::sqrt(rn)));
}

FreshnessResult freshness(const std::vector<std::vector<std::string>>& runs) {
  FreshnessResult out;
  std::unordered_set<std::string> seen;
  for (const auto& run : runs) {
    std::vector<int> row;
    int fresh = 0;
    row.reserve(run.size());
    for (const std::string& id : run) {
      bool is_fresh = seen.count(id) == 0;
      row.push_back(is_fresh ? 1 : 0);
      fresh += is_fresh ? 1 : 0;
    }
    out.grid.push_back(std::move(row));
    out.per_run_ratio.push_back(run.empty() ? 0.0f
                                            : static_cast<float>(fresh) /
                                                  static_cast<float>(run.size()));
    for (const std::string& id : run) seen.insert(id);
  }
  return out;
}

std::vector<ExposureBucket> popularity_exposure(
    const std::vector<std::vector<std::string>>& generated,
    const std::vector<std::vector<std::string>>& reference,
    const std::vector<CatalogItem>& catalog) {
  std::unordered_map<std::string, long> pop;
  long max_pop = 0;
  for (const CatalogItem& c : catalog) {
    pop[c.item_id] = c.popularity;
    max_pop = std::max(max_pop, c.popularity);
  }
  // log-spaced bucket edges: [0,1), [1,2), [2,4), [4,8), ...
  std::vector<long> edges = {0, 1};
  for (long e = 2; e <= max_pop; e *= 2) edges.push_back(e);
  edges.push_back(std::max<long>(max_pop + 1, edges.back() * 2));
  size_t nb = edges.size() - 1;
  auto bucket_of = [&](long p) {
    for (size_t b = 0; b < nb; ++b)
      if (p >= edges[b] && p < edges[b + 1]) return b;
    return nb - 1;
  };
  std::vector<double> gen_count(nb, 0.0), ref_count(nb, 0.0);
  double gen_total = 0.0, ref_total = 0.0;
  for (const auto& slate : generated)
    for (const std::string& id : slate) {
      if (id == kPadId) continue;
      auto it = pop.find(id);
      if (it == pop.end()) continue;
      gen_count[bucket_of(it->second)] += 1.0;
      gen_total += 1.0;
    }
  for (const auto& slate : reference)
    for (const std::string& id : slate) {
      if (id == kPadId) continue;
      auto it = pop.find(id);
      if (it == pop.end()) continue;
      ref_count[bucket_of(it->second)] += 1.0;
      ref_total += 1.0;
    }
  std::vector<ExposureBucket> out(nb);
  for (size_t b = 0; b < nb; ++b) {
    out[b].pop_lo = edges[b];
    out[b].pop_hi = edges[b + 1];
    out[b].generated_share = gen_total > 0.0 ? gen_count[b] / gen_total : 0.0;
    out[b].reference_share = ref_total > 0.0 ? ref_count[b] / ref_total : 0.0;
    if (out[b].reference_share > 0.0) {
      out[b].ratio_defined = true;
      out[b].ratio = out[b].generated_share / out[b].reference_share;
    }
  }
  return out;
}

}  // namespace dmsr
