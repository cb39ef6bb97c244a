#pragma once

#include <memory>

#include "dmsr/layers.hpp"
#include "dmsr/tokenizer.hpp"

namespace dmsr {

struct ContextEncoderConfig {
  int vocab_size = 0;
  int max_tokens = 77;
  int model_dim = 128;  // d_tau
  int layers = 3;
  int heads = 8;
  int ffn_hidden = 128;
  float dropout = 0.1f;
};

/// Encoded prompt: c is max_tokens x d_tau, with an additive attention mask
/// row excluding pad positions from any downstream attention.
struct Context {
  nn::Tape::NodeId c;
  nn::Tape::NodeId mask;  // 1 x max_tokens, 0 or -1e9
};

/// tau: transformer encoder over token embeddings + sinusoidal positions.
/// Trained jointly with the denoiser through the shared tape.
class ContextEncoder {
 public:
  ContextEncoder(const ContextEncoderConfig& cfg, nn::ParamRegistry& reg, nn::Rng& rng);

  Context encode(nn::Tape& t, const PromptTokenizer::Encoded& tokens, bool training,
                 nn::Rng& dropout_rng) const;

  const ContextEncoderConfig& config() const { return cfg_; }

 private:
  struct Layer {
    nn::MultiHeadAttention attn;
    nn::FeedForward ffn;
    Layer(nn::ParamRegistry& reg, nn::Rng& rng, const ContextEncoderConfig& cfg,
          const std::string& name);
  };
  ContextEncoderConfig cfg_;
  nn::Parameter token_embedding_;  // vocab x d_tau
  nn::Tensor positions_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace dmsr
