#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dmsr/context_encoder.hpp"
#include "dmsr/denoiser.hpp"
#include "dmsr/schedule.hpp"
#include "dmsr/tokenizer.hpp"

namespace dmsr {

struct ModelConfig {
  DenoiserConfig denoiser;
  ContextEncoderConfig context;
  ScheduleKind schedule_kind = ScheduleKind::kLinear;
  int T = 1000;
};

/// The trained bundle: tokenizer + context encoder + denoiser + schedule,
/// with every trainable Parameter tracked in `params`. Not copyable.
struct DiffusionModel {
  ModelConfig cfg;
  PromptTokenizer tokenizer;
  nn::ParamRegistry params;
  std::unique_ptr<ContextEncoder> tau;
  std::unique_ptr<Denoiser> denoiser;
  DiffusionSchedule schedule;

  DiffusionModel(ModelConfig cfg, PromptTokenizer tokenizer, uint64_t init_seed);
  DiffusionModel(const DiffusionModel&) = delete;
  DiffusionModel& operator=(const DiffusionModel&) = delete;
};

// x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps, t in [1, T].
nn::Tensor forward_sample(const nn::Tensor& x0, int t, const nn::Tensor& eps,
                          const DiffusionSchedule& s);

// v = signal_t * eps - noise_t * x_0.
nn::Tensor v_target(const nn::Tensor& x0, const nn::Tensor& eps, int t,
                    const DiffusionSchedule& s);

// x0_hat = signal_t * x_t - noise_t * v.
nn::Tensor recover_x0(const nn::Tensor& x_t, const nn::Tensor& v, int t,
                      const DiffusionSchedule& s);

// eps_hat = noise_t * x_t + signal_t * v (algebraic complement of recover_x0).
nn::Tensor recover_eps(const nn::Tensor& x_t, const nn::Tensor& v, int t,
                       const DiffusionSchedule& s);

// Reverse update from step t to t_prev (0 <= t_prev < t). With z the update
// is the posterior mean plus sigma * z (t_prev = t-1 reproduces the
// single-step ancestral chain). With z = nullptr it is the zero-variance
// member of the same family, which is stride-consistent: few-step and
// full-chain deterministic sampling follow the same trajectory. Both
// branches return x0_hat exactly at t_prev = 0.
nn::Tensor reverse_step_from_v(const nn::Tensor& x_t, const nn::Tensor& v, int t, int t_prev,
                               const DiffusionSchedule& s, const nn::Tensor* z = nullptr);

struct TrainExample {
  nn::Tensor x0;
  PromptTokenizer::Encoded tokens;
};

enum class LossKind { kVelocity, kEpsilon };

// One optimization-ready pass: builds a tape over the whole batch, runs
// backward, returns the scalar loss. t and eps are drawn per element from
// `rng`. Gradients accumulate into model.params.
float training_loss_backward(DiffusionModel& model, const std::vector<TrainExample>& batch,
                             nn::Rng& rng, LossKind kind = LossKind::kVelocity);

// Inference-only forward pass of v_theta (dropout off).
nn::Tensor predict_velocity(const DiffusionModel& model, const nn::Tensor& x_t, int t,
                            const PromptTokenizer::Encoded& tokens);

// Strided timestep ladder: `steps` values descending from T, spaced uniformly
// in the diffusion angle acos(signal_t) so that each step covers an equal
// angular arc of the schedule. steps >= T yields the full chain {T, ..., 1}.
// The caller pairs ts[i] with ts[i+1], final 0.
std::vector<int> stride_timesteps(const DiffusionSchedule& s, int steps);

struct SampleOptions {
  int steps = 0;  // 0 means full chain (T steps)
  uint64_t seed = 0;
  bool posterior_noise = false;
};

// Full generation in latent space: x_T ~ N(0, I) from seed, strided reverse
// to x_0.
nn::Tensor sample_latent(const DiffusionModel& model, const std::string& prompt,
                         const SampleOptions& opts);

nn::Tensor gaussian_tensor(int rows, int cols, nn::Rng& rng);

}  // namespace dmsr
