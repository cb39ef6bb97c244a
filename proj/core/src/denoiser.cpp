#include "dmsr/denoiser.hpp"

#include "dmsr/errors.hpp"

namespace dmsr {

using nn::Tape;

Denoiser::ResidualBlock::ResidualBlock(nn::ParamRegistry& reg, nn::Rng& rng,
                                       const DenoiserConfig& cfg, const std::string& name)
    : fc_in(reg, rng, cfg.model_dim, cfg.model_dim, name + ".fc_in"),
      fc_out(reg, rng, cfg.model_dim, cfg.model_dim, name + ".fc_out"),
      norm(reg, cfg.model_dim, cfg.groups, name + ".norm") {}

Tape::NodeId Denoiser::ResidualBlock::forward(Tape& t, Tape::NodeId h,
                                              Tape::NodeId temb) const {
  Tape::NodeId u = t.add_row(fc_in.forward(t, h), temb);
  u = t.swish(norm.forward(t, u));
  u = fc_out.forward(t, u);
  return t.add(u, h);
}

Denoiser::TransformerBlock::TransformerBlock(nn::ParamRegistry& reg, nn::Rng& rng,
                                             const DenoiserConfig& cfg, const std::string& name)
    : norm(reg, cfg.model_dim, cfg.groups, name + ".norm"),
      proj_in(reg, rng, cfg.model_dim, cfg.model_dim, name + ".proj_in"),
      proj_out(reg, rng, cfg.model_dim, cfg.model_dim, name + ".proj_out"),
      self_attn(reg, rng, cfg.model_dim, cfg.model_dim, cfg.heads, cfg.head_dim,
                name + ".self_attn"),
      cross_attn(reg, rng, cfg.model_dim, cfg.context_dim, cfg.heads, cfg.head_dim,
                 name + ".cross_attn"),
      ffn(reg, rng, cfg.model_dim, cfg.model_dim, nn::Activation::kSwish, name + ".ffn") {}

Tape::NodeId Denoiser::TransformerBlock::forward(Tape& t, Tape::NodeId h,
                                                 const Context& ctx) const {
  Tape::NodeId u = proj_in.forward(t, norm.forward(t, h));
  u = t.add(u, self_attn.forward(t, u, u));
  u = t.add(u, cross_attn.forward(t, u, ctx.c, ctx.mask));
  u = t.add(u, ffn.forward(t, u));
  u = proj_out.forward(t, u);
  return t.add(h, u);
}

Denoiser::Denoiser(const DenoiserConfig& cfg, nn::ParamRegistry& reg, nn::Rng& rng)
    : cfg_(cfg),
      input_proj_(reg, rng, cfg.latent_dim, cfg.model_dim, "denoiser.input_proj"),
      time_fc1_(reg, rng, cfg.model_dim, cfg.model_dim, "denoiser.time_fc1"),
      time_fc2_(reg, rng, cfg.model_dim, cfg.model_dim, "denoiser.time_fc2"),
      final_norm_(reg, cfg.model_dim, cfg.groups, "denoiser.final_norm"),
      output_proj_(reg, rng, cfg.model_dim, cfg.latent_dim, "denoiser.output_proj",
                   /*zero_init=*/true) {
  if (cfg.heads * cfg.head_dim != cfg.model_dim)
    throw ConfigError("denoiser: heads * head_dim must equal model_dim");
  for (int i = 0; i < cfg.layers; ++i) {
    std::string base = "denoiser.layer" + std::to_string(i);
    res_blocks_.push_back(std::make_unique<ResidualBlock>(reg, rng, cfg, base + ".res"));
    attn_blocks_.push_back(std::make_unique<TransformerBlock>(reg, rng, cfg, base + ".attn"));
  }
}

Tape::NodeId Denoiser::forward(Tape& t, Tape::NodeId x_t, int step,
                               const Context& context) const {
  const nn::Tensor& x = t.value(x_t);
  if (x.rows != cfg_.slate_len || x.cols != cfg_.latent_dim)
    throw ConfigError("denoiser: input " + x.shape_str() + ", expected " +
                      std::to_string(cfg_.slate_len) + "x" + std::to_string(cfg_.latent_dim));
  // one time embedding, shared across every residual block
  Tape::NodeId temb = t.constant(
      nn::sinusoidal_embedding(static_cast<float>(step), cfg_.model_dim));
  temb = time_fc2_.forward(t, t.swish(time_fc1_.forward(t, temb)));

  Tape::NodeId h = input_proj_.forward(t, x_t);
  for (size_t i = 0; i < res_blocks_.size(); ++i) {
    h = res_blocks_[i]->forward(t, h, temb);
    h = attn_blocks_[i]->forward(t, h, context);
  }
  h = t.swish(final_norm_.forward(t, h));
  return output_proj_.forward(t, h);
}

}  // namespace dmsr
