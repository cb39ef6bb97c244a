#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace dmsr {

/// Whitespace/punctuation word tokenizer with a vocabulary built from
/// training labels. Ids 0/1/2 are pad/unknown/start; output is always
/// exactly max_tokens long.
class PromptTokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;
  static constexpr int kStart = 2;

  PromptTokenizer() = default;

  // Builds the vocabulary from labels; words below min_frequency map to
  // unknown.
  static PromptTokenizer build(const std::vector<std::string>& labels, int max_tokens,
                               int min_frequency = 2);
  // Reconstructs from a sorted token list (checkpoint manifest form).
  static PromptTokenizer from_vocab(const std::vector<std::string>& sorted_tokens,
                                    int max_tokens);

  struct Encoded {
    std::vector<int> ids;        // length max_tokens
    std::vector<bool> is_real;   // true at start + word positions
  };
  Encoded encode(const std::string& text) const;

  static std::vector<std::string> split_words(const std::string& text);

  int vocab_size() const { return static_cast<int>(sorted_tokens_.size()) + 3; }
  int max_tokens() const { return max_tokens_; }
  const std::vector<std::string>& sorted_tokens() const { return sorted_tokens_; }

 private:
  int max_tokens_ = 77;
  std::vector<std::string> sorted_tokens_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace dmsr
