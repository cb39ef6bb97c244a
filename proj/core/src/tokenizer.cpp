#include "dmsr/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "dmsr/data.hpp"
#include "dmsr/errors.hpp"

namespace dmsr {

std::vector<std::string> PromptTokenizer::split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

PromptTokenizer PromptTokenizer::build(const std::vector<std::string>& labels, int max_tokens,
                                       int min_frequency) {
  std::map<std::string, int> freq;
  for (const std::string& label : labels)
    for (const std::string& w : split_words(label)) ++freq[w];
  std::vector<std::string> vocab;
  for (const auto& [w, n] : freq)
    if (n >= min_frequency) vocab.push_back(w);
  return from_vocab(vocab, max_tokens);
}

PromptTokenizer PromptTokenizer::from_vocab(const std::vector<std::string>& sorted_tokens,
                                            int max_tokens) {
  if (max_tokens < 1) throw ConfigError("tokenizer: max_tokens must be >= 1");
  PromptTokenizer t;
  t.max_tokens_ = max_tokens;
  t.sorted_tokens_ = sorted_tokens;
  std::sort(t.sorted_tokens_.begin(), t.sorted_tokens_.end());
  t.sorted_tokens_.erase(std::unique(t.sorted_tokens_.begin(), t.sorted_tokens_.end()),
                         t.sorted_tokens_.end());
  for (size_t i = 0; i < t.sorted_tokens_.size(); ++i)
    t.token_to_id_[t.sorted_tokens_[i]] = static_cast<int>(i) + 3;
  return t;
}

PromptTokenizer::Encoded PromptTokenizer::encode(const std::string& text) const {
  Encoded e;
  e.ids.assign(max_tokens_, kPad);
  e.is_real.assign(max_tokens_, false);
  e.ids[0] = kStart;
  e.is_real[0] = true;
  int pos = 1;
  for (const std::string& w : split_words(text)) {
    if (pos >= max_tokens_) break;  // truncate
    auto it = token_to_id_.find(w);
    e.ids[pos] = it == token_to_id_.end() ? kUnknown : it->second;
    e.is_real[pos] = true;
    ++pos;
  }
  return e;
}

}  // namespace dmsr
