#include "dmsr/embeddings.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "dmsr/errors.hpp"

namespace dmsr {

EmbeddingTable train_embeddings(const std::vector<CatalogItem>& catalog,
                                const std::vector<Slate>& slates, int dim) {
  int n_items = static_cast<int>(catalog.size());
  if (dim > n_items)
    throw ConfigError("train_embeddings: dim " + std::to_string(dim) + " exceeds catalog size " +
                      std::to_string(n_items));
  std::unordered_map<std::string, int> pos;
  std::vector<std::string> ids;
  ids.reserve(n_items);
  for (const CatalogItem& c : catalog) {
    pos[c.item_id] = static_cast<int>(ids.size());
    ids.push_back(c.item_id);
  }

  // pair counts: slates containing both i and j (i != j)
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_items, n_items);
  std::vector<char> seen_anywhere(n_items, 0);
  for (const Slate& s : slates) {
    std::unordered_set<int> members;
    for (int i = 0; i < s.true_length; ++i) {
      auto it = pos.find(s.items[i]);
      if (it == pos.end())
        throw DataError("train_embeddings: slate item not in catalog: " + s.items[i]);
      members.insert(it->second);
      seen_anywhere[it->second] = 1;
    }
    std::vector<int> m(members.begin(), members.end());
    for (size_t a = 0; a < m.size(); ++a)
      for (size_t b = a + 1; b < m.size(); ++b) {
        counts(m[a], m[b]) += 1.0;
        counts(m[b], m[a]) += 1.0;
      }
  }
  for (int i = 0; i < n_items; ++i)
    if (!seen_anywhere[i])
      throw DataError("train_embeddings: item appears in no slate: " + ids[i]);

  double total = counts.sum();
  if (total == 0.0) throw DataError("train_embeddings: no co-occurrence at all");
  Eigen::VectorXd marginal = counts.rowwise().sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(n_items, n_items);
  for (int i = 0; i < n_items; ++i)
    for (int j = 0; j < n_items; ++j) {
      if (counts(i, j) == 0.0) continue;
      double pmi = std::log(counts(i, j) * total / (marginal(i) * marginal(j)));
      if (pmi > 0.0) ppmi(i, j) = pmi;
    }

  // symmetric PPMI: truncated eigendecomposition is the SVD
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ppmi);
  if (solver.info() != Eigen::Success)
    throw StateError("train_embeddings: eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();    // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  EmbeddingTable table(dim);
  Eigen::MatrixXd emb(n_items, dim);
  for (int k = 0; k < dim; ++k) {
    int col = n_items - 1 - k;  // descending eigenvalue order
    Eigen::VectorXd v = evecs.col(col);
    // deterministic sign: largest-|.| component positive
    int arg = 0;
    for (int i = 1; i < n_items; ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0.0) v = -v;
    double scale = std::sqrt(std::max(evals(col), 0.0));
    emb.col(k) = v * scale;
  }
  for (int i = 0; i < n_items; ++i) {
    std::vector<float> row(dim);
    double norm = emb.row(i).norm();
    if (norm == 0.0) {
      // isolated direction; fall back to a deterministic unit basis vector
      row[i % dim] = 1.0f;
    } else {
      for (int k = 0; k < dim; ++k) row[k] = static_cast<float>(emb(i, k) / norm);
    }
    table.insert(ids[i], row);
  }
  return table;
}

nn::Tensor encode_slate(const Slate& slate, const EmbeddingTable& table) {
  nn::Tensor x(static_cast<int>(slate.items.size()), table.dim());
  for (size_t i = 0; i < slate.items.size(); ++i) {
    const float* v = table.vector(slate.items[i]);  // pad -> zero vector
    std::copy(v, v + table.dim(), x.row(static_cast<int>(i)));
  }
  return x;
}

std::vector<std::string> round_latent(const nn::Tensor& latent, const NeighborIndex& index,
                                      bool dedup, const std::set<std::string>& session_exclude) {
  if (latent.cols != index.dim())
    throw ConfigError("round_latent: latent dim " + std::to_string(latent.cols) +
                      " != index dim " + std::to_string(index.dim()));
  std::vector<std::string> out;
  out.reserve(latent.rows);
  std::set<std::string> used = session_exclude;
  for (int r = 0; r < latent.rows; ++r) {
    auto hits = index.nearest(latent.row(r), 1, dedup ? used : session_exclude);
    if (hits.empty())
      throw DataError("round_latent: catalog exhausted at position " + std::to_string(r));
    out.push_back(hits[0].item_id);
    if (dedup) used.insert(hits[0].item_id);
  }
  return out;
}

}  // namespace dmsr
