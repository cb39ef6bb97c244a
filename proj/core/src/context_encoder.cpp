#include "dmsr/context_encoder.hpp"

#include "dmsr/errors.hpp"

namespace dmsr {

using nn::Tape;

ContextEncoder::Layer::Layer(nn::ParamRegistry& reg, nn::Rng& rng,
                             const ContextEncoderConfig& cfg, const std::string& name)
    : attn(reg, rng, cfg.model_dim, cfg.model_dim, cfg.heads, cfg.model_dim / cfg.heads,
           name + ".attn"),
      ffn(reg, rng, cfg.model_dim, cfg.ffn_hidden, nn::Activation::kRelu, name + ".ffn") {}

ContextEncoder::ContextEncoder(const ContextEncoderConfig& cfg, nn::ParamRegistry& reg,
                               nn::Rng& rng)
    : cfg_(cfg),
      token_embedding_(nn::uniform_init(cfg.vocab_size, cfg.model_dim, rng), "tau.embedding"),
      positions_(nn::positional_encoding(cfg.max_tokens, cfg.model_dim)) {
  if (cfg.model_dim % cfg.heads != 0)
    throw ConfigError("context encoder: heads must divide model_dim");
  if (cfg.vocab_size < 3) throw ConfigError("context encoder: vocab too small");
  reg.track(token_embedding_);
  for (int i = 0; i < cfg.layers; ++i)
    layers_.push_back(std::make_unique<Layer>(reg, rng, cfg, "tau.layer" + std::to_string(i)));
}

Context ContextEncoder::encode(Tape& t, const PromptTokenizer::Encoded& tokens, bool training,
                               nn::Rng& dropout_rng) const {
  if (static_cast<int>(tokens.ids.size()) != cfg_.max_tokens)
    throw ConfigError("context encoder: token sequence length mismatch");
  Tape::NodeId mask = t.constant(nn::attention_mask_row(tokens.is_real));
  Tape::NodeId x = t.add(t.embedding_rows(const_cast<nn::Parameter&>(token_embedding_),
                                          tokens.ids),
                         t.constant(positions_));
  for (const auto& layer : layers_) {
    Tape::NodeId a = layer->attn.forward(t, x, x, mask);
    x = t.add(x, nn::apply_dropout(t, a, cfg_.dropout, dropout_rng, training));
    Tape::NodeId f = layer->ffn.forward(t, x);
    x = t.add(x, nn::apply_dropout(t, f, cfg_.dropout, dropout_rng, training));
  }
  return Context{x, mask};
}

}  // namespace dmsr
