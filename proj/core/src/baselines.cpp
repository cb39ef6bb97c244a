#include "dmsr/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "dmsr/adam.hpp"
#include "dmsr/errors.hpp"

namespace dmsr {

std::vector<std::string> baseline_popularity(const std::vector<CatalogItem>& catalog, int k) {
  if (k > static_cast<int>(catalog.size()))
    throw DataError("baseline_popularity: k exceeds catalog size");
  std::vector<const CatalogItem*> sorted;
  sorted.reserve(catalog.size());
  for (const CatalogItem& c : catalog) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const CatalogItem* a, const CatalogItem* b) {
    if (a->popularity != b->popularity) return a->popularity > b->popularity;
    return a->item_id < b->item_id;
  });
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(sorted[i]->item_id);
  return out;
}

std::string Bm25Index::item_document(const CatalogItem& item) {
  std::string doc = item.display_name;
  for (const auto& [key, values] : item.metadata)
    for (const std::string& v : values) {
      doc += " ";
      doc += v;
    }
  return doc;
}

Bm25Index::Bm25Index(const std::vector<CatalogItem>& catalog, double k1, double b)
    : k1_(k1), b_(b) {
  long total_len = 0;
  for (const CatalogItem& item : catalog) {
    std::unordered_map<std::string, int> tf;
    int len = 0;
    for (const std::string& w : PromptTokenizer::split_words(item_document(item))) {
      ++tf[w];
      ++len;
    }
    for (const auto& [w, n] : tf) ++doc_freq_[w];
    index_[item.item_id] = ids_.size();
    ids_.push_back(item.item_id);
    term_freq_.push_back(std::move(tf));
    doc_len_.push_back(len);
    total_len += len;
  }
  avg_len_ = ids_.empty() ? 1.0 : static_cast<double>(total_len) / ids_.size();
}

double Bm25Index::score(const std::string& query, const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) throw DataError("bm25: unknown item id " + item_id);
  size_t d = it->second;
  double n_docs = static_cast<double>(ids_.size());
  double score = 0.0;
  for (const std::string& q : PromptTokenizer::split_words(query)) {
    auto dfi = doc_freq_.find(q);
    if (dfi == doc_freq_.end()) continue;
    auto tfi = term_freq_[d].find(q);
    if (tfi == term_freq_[d].end()) continue;
    double df = dfi->second;
    double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
    double tf = tfi->second;
    double norm = tf * (k1_ + 1.0) /
                  (tf + k1_ * (1.0 - b_ + b_ * doc_len_[d] / avg_len_));
    score += idf * norm;
  }
  return score;
}

std::vector<std::string> Bm25Index::top_k(const std::string& query, int k) const {
  if (k > static_cast<int>(ids_.size())) throw DataError("bm25: k exceeds catalog size");
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(ids_.size());
  for (const std::string& id : ids_) scored.emplace_back(score(query, id), id);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(scored[i].second);
  return out;
}

Prompt2Vec::Prompt2Vec(const PromptTokenizer& tokenizer, int embedding_dim, const Config& cfg)
    : tokenizer_(tokenizer), cfg_(cfg), rng_(cfg.seed) {
  fc1_ = std::make_unique<nn::Dense>(params_, rng_, tokenizer.vocab_size(), cfg.hidden_dim,
                                     "prompt2vec.fc1");
  fc2_ = std::make_unique<nn::Dense>(params_, rng_, cfg.hidden_dim, embedding_dim,
                                     "prompt2vec.fc2");
}

nn::Tensor Prompt2Vec::bag_of_tokens(const std::string& text) const {
  nn::Tensor bag(1, tokenizer_.vocab_size());
  PromptTokenizer::Encoded enc = tokenizer_.encode(text);
  int count = 0;
  for (int i = 0; i < tokenizer_.max_tokens(); ++i)
    if (enc.is_real[i] && enc.ids[i] != PromptTokenizer::kStart) {
      bag.data[enc.ids[i]] += 1.0f;
      ++count;
    }
  if (count > 0)
    for (float& v : bag.data) v /= static_cast<float>(count);
  return bag;
}

void Prompt2Vec::train(const std::vector<CatalogItem>& catalog, const EmbeddingTable& table) {
  std::vector<nn::Tensor> inputs, targets;
  for (const CatalogItem& item : catalog) {
    inputs.push_back(bag_of_tokens(Bm25Index::item_document(item)));
    nn::Tensor tgt(1, table.dim());
    const float* v = table.vector(item.item_id);
    std::copy(v, v + table.dim(), tgt.data.begin());
    targets.push_back(std::move(tgt));
  }
  nn::Adam opt(cfg_.lr);
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    nn::Tape tape;
    nn::Tape::NodeId total = -1;
    for (size_t i = 0; i < inputs.size(); ++i) {
      nn::Tape::NodeId h = fc2_->forward(
          tape, tape.relu(fc1_->forward(tape, tape.constant(inputs[i]))));
      nn::Tape::NodeId l = tape.mse(h, targets[i]);
      total = total < 0 ? l : tape.add(total, l);
    }
    tape.backward(tape.scale(total, 1.0f / static_cast<float>(inputs.size())));
    opt.step(params_.params);
  }
}

std::vector<float> Prompt2Vec::embed_prompt(const std::string& prompt) const {
  nn::Tape tape;
  nn::Tape::NodeId h = fc2_->forward(
      tape, tape.relu(fc1_->forward(tape, tape.constant(bag_of_tokens(prompt)))));
  return tape.value(h).data;
}

std::vector<std::string> Prompt2Vec::top_k(const std::string& prompt,
                                           const NeighborIndex& index, int k) const {
  std::vector<float> q = embed_prompt(prompt);
  std::vector<Neighbor> hits = index.nearest(q.data(), k);
  std::vector<std::string> out;
  out.reserve(hits.size());
  for (const Neighbor& h : hits) out.push_back(h.item_id);
  return out;
}

}  // namespace dmsr
