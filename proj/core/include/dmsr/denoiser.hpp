#pragma once

#include <memory>

#include "dmsr/context_encoder.hpp"
#include "dmsr/layers.hpp"

namespace dmsr {

struct DenoiserConfig {
  int latent_dim = 80;   // d, catalog embedding width
  int slate_len = 32;    // n
  int model_dim = 320;
  int layers = 3;
  int heads = 10;
  int head_dim = 32;
  int groups = 20;
  int context_dim = 128;  // d_tau
};

/// v_theta: predicts the velocity from (x_t, t, context). Input projection
/// d -> model_dim, then per layer a residual block (time-conditioned) and a
/// cross-attending transformer block, then swish + group norm and a
/// zero-initialized output projection back to d.
class Denoiser {
 public:
  Denoiser(const DenoiserConfig& cfg, nn::ParamRegistry& reg, nn::Rng& rng);

  nn::Tape::NodeId forward(nn::Tape& t, nn::Tape::NodeId x_t, int step,
                           const Context& context) const;

  const DenoiserConfig& config() const { return cfg_; }

 private:
  struct ResidualBlock {
    nn::Dense fc_in, fc_out;
    nn::GroupNorm norm;
    ResidualBlock(nn::ParamRegistry& reg, nn::Rng& rng, const DenoiserConfig& cfg,
                  const std::string& name);
    nn::Tape::NodeId forward(nn::Tape& t, nn::Tape::NodeId h, nn::Tape::NodeId temb) const;
  };
  struct TransformerBlock {
    nn::GroupNorm norm;
    nn::Dense proj_in, proj_out;
    nn::MultiHeadAttention self_attn, cross_attn;
    nn::FeedForward ffn;
    TransformerBlock(nn::ParamRegistry& reg, nn::Rng& rng, const DenoiserConfig& cfg,
                     const std::string& name);
    nn::Tape::NodeId forward(nn::Tape& t, nn::Tape::NodeId h, const Context& ctx) const;
  };

  DenoiserConfig cfg_;
  nn::Dense input_proj_;
  nn::Dense time_fc1_, time_fc2_;
  std::vector<std::unique_ptr<ResidualBlock>> res_blocks_;
  std::vector<std::unique_ptr<TransformerBlock>> attn_blocks_;
  nn::GroupNorm final_norm_;
  nn::Dense output_proj_;
};

}  // namespace dmsr
