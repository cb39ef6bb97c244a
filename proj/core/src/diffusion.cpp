#include "dmsr/diffusion.hpp"

#include <cmath>
#include <limits>

#include "dmsr/errors.hpp"

namespace dmsr {

using nn::Tape;
using nn::Tensor;

namespace {

void check_step(int t, const DiffusionSchedule& s, const char* op) {
  if (t < 1 || t > s.T)
    throw ConfigError(std::string(op) + ": step " + std::to_string(t) + " out of [1, " +
                      std::to_string(s.T) + "]");
}

}  // namespace

DiffusionModel::DiffusionModel(ModelConfig cfg_in, PromptTokenizer tok, uint64_t init_seed)
    : cfg(std::move(cfg_in)), tokenizer(std::move(tok)) {
  cfg.context.vocab_size = tokenizer.vocab_size();
  cfg.context.max_tokens = tokenizer.max_tokens();
  if (cfg.denoiser.context_dim != cfg.context.model_dim)
    throw ConfigError("model config: denoiser context_dim != tau model_dim");
  nn::Rng rng(init_seed);
  tau = std::make_unique<ContextEncoder>(cfg.context, params, rng);
  denoiser = std::make_unique<Denoiser>(cfg.denoiser, params, rng);
  schedule = make_schedule(cfg.schedule_kind, cfg.T);
}

Tensor gaussian_tensor(int rows, int cols, nn::Rng& rng) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  Tensor t(rows, cols);
  for (float& v : t.data) v = dist(rng);
  return t;
}

Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps, const DiffusionSchedule& s) {
  check_step(t, s, "forward_sample");
  if (!x0.same_shape(eps)) throw ConfigError("forward_sample: shape mismatch");
  Tensor out = x0;
  float sig = s.signal_at(t);
  float ns = s.noise_at(t);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = sig * x0.data[i] + ns * eps.data[i];
  return out;
}

Tensor v_target(const Tensor& x0, const Tensor& eps, int t, const DiffusionSchedule& s) {
  check_step(t, s, "v_target");
  if (!x0.same_shape(eps)) throw ConfigError("v_target: shape mismatch");
  Tensor out = x0;
  float sig = s.signal_at(t);
  float ns = s.noise_at(t);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = sig * eps.data[i] - ns * x0.data[i];
  return out;
}

Tensor recover_x0(const Tensor& x_t, const Tensor& v, int t, const DiffusionSchedule& s) {
  check_step(t, s, "recover_x0");
  Tensor out = x_t;
  float sig = s.signal_at(t);
  float ns = s.noise_at(t);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = sig * x_t.data[i] - ns * v.data[i];
  return out;
}

Tensor recover_eps(const Tensor& x_t, const Tensor& v, int t, const DiffusionSchedule& s) {
  check_step(t, s, "recover_eps");
  Tensor out = x_t;
  float sig = s.signal_at(t);
  float ns = s.noise_at(t);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = ns * x_t.data[i] + sig * v.data[i];
  return out;
}

Tensor reverse_step_from_v(const Tensor& x_t, const Tensor& v, int t, int t_prev,
                           const DiffusionSchedule& s, const Tensor* z) {
  check_step(t, s, "reverse_step");
  if (t_prev < 0 || t_prev >= t)
    throw ConfigError("reverse_step: t_prev " + std::to_string(t_prev) +
                      " must be in [0, t)");
  Tensor x0_hat = recover_x0(x_t, v, t, s);
  float abar_t = s.alpha_bar_at(t);
  float abar_p = s.alpha_bar_at(t_prev);
  Tensor out = x_t;
  if (z == nullptr) {
    // Deterministic strided update: x_prev = sqrt(abar_p) x0_hat +
    // sqrt(1 - abar_p) eps_hat. Consistent across stride widths (the
    // zero-variance member of the same posterior family as the noisy branch),
    // so few-step and full-chain sampling track the same trajectory.
    Tensor eps_hat = recover_eps(x_t, v, t, s);
    float a = std::sqrt(abar_p);
    float b = std::sqrt(1.0f - abar_p);
    for (size_t i = 0; i < out.size(); ++i)
      out.data[i] = a * x0_hat.data[i] + b * eps_hat.data[i];
    return out;
  }
  float alpha_tilde = abar_t / abar_p;       // effective alpha over the skipped span
  float beta_tilde = 1.0f - alpha_tilde;
  float c0 = std::sqrt(abar_p) * beta_tilde / (1.0f - abar_t);
  float ct = std::sqrt(alpha_tilde) * (1.0f - abar_p) / (1.0f - abar_t);
  for (size_t i = 0; i < out.size(); ++i)
    out.data[i] = c0 * x0_hat.data[i] + ct * x_t.data[i];
  if (t_prev > 0) {
    float sigma = std::sqrt(beta_tilde * (1.0f - abar_p) / (1.0f - abar_t));
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += sigma * z->data[i];
  }
  return out;
}

float training_loss_backward(DiffusionModel& model, const std::vector<TrainExample>& batch,
                             nn::Rng& rng, LossKind kind) {
  if (batch.empty()) throw ConfigError("training_loss_backward: empty batch");
  std::uniform_int_distribution<int> t_dist(1, model.schedule.T);
  Tape tape;
  Tape::NodeId total = -1;
  for (const TrainExample& ex : batch) {
    int t = t_dist(rng);
    Tensor eps = gaussian_tensor(ex.x0.rows, ex.x0.cols, rng);
    Tensor x_t = forward_sample(ex.x0, t, eps, model.schedule);
    Tensor target = kind == LossKind::kVelocity ? v_target(ex.x0, eps, t, model.schedule) : eps;
    Context ctx = model.tau->encode(tape, ex.tokens, /*training=*/true, rng);
    Tape::NodeId pred = model.denoiser->forward(tape, tape.constant(std::move(x_t)), t, ctx);
    Tape::NodeId l = tape.mse(pred, target);
    total = total < 0 ? l : tape.add(total, l);
  }
  Tape::NodeId loss = tape.scale(total, 1.0f / static_cast<float>(batch.size()));
  const Tensor& lv = tape.value(loss);
  if (!lv.all_finite())
    throw StateError("training loss non-finite over batch of " + std::to_string(batch.size()));
  tape.backward(loss);
  return lv.data[0];
}

Tensor predict_velocity(const DiffusionModel& model, const Tensor& x_t, int t,
                        const PromptTokenizer::Encoded& tokens) {
  Tape tape;
  nn::Rng unused(0);
  Context ctx = model.tau->encode(tape, tokens, /*training=*/false, unused);
  Tape::NodeId out = model.denoiser->forward(tape, tape.constant(x_t), t, ctx);
  Tensor v = tape.value(out);
  v.require_finite("denoiser output");
  return v;
}

std::vector<int> stride_timesteps(const DiffusionSchedule& s, int steps) {
  if (steps < 1) throw ConfigError("stride_timesteps: steps must be >= 1");
  int T = s.T;
  std::vector<int> ts;
  if (steps >= T) {  // full chain
    ts.reserve(T);
    for (int t = T; t >= 1; --t) ts.push_back(t);
    return ts;
  }
  // Place steps uniformly in the diffusion angle theta(t) = acos(signal_t)
  // rather than uniformly in t: equal angular arcs equalize per-step
  // integration error, so few-step and full-chain trajectories stay close
  // even when the schedule concentrates its signal decay in a narrow t band.
  double theta_T = std::acos(static_cast<double>(s.signal_at(T)));
  ts.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    double target = theta_T * static_cast<double>(steps - i) / steps;
    int best = 1;
    double best_err = std::numeric_limits<double>::max();
    for (int t = 1; t <= T; ++t) {
      double err = std::abs(std::acos(static_cast<double>(s.signal_at(t))) - target);
      if (err < best_err) {
        best_err = err;
        best = t;
      }
    }
    if (ts.empty() || best < ts.back()) ts.push_back(best);
  }
  return ts;
}

Tensor sample_latent(const DiffusionModel& model, const std::string& prompt,
                     const SampleOptions& opts) {
  const DenoiserConfig& dc = model.cfg.denoiser;
  nn::Rng rng(opts.seed);
  Tensor x = gaussian_tensor(dc.slate_len, dc.latent_dim, rng);
  PromptTokenizer::Encoded tokens = model.tokenizer.encode(prompt);
  int steps = opts.steps <= 0 ? model.schedule.T : opts.steps;
  std::vector<int> ts = stride_timesteps(model.schedule, steps);
  for (size_t i = 0; i < ts.size(); ++i) {
    int t = ts[i];
    int t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
    Tensor v = predict_velocity(model, x, t, tokens);
    if (opts.posterior_noise && t_prev > 0) {
      Tensor z = gaussian_tensor(x.rows, x.cols, rng);
      x = reverse_step_from_v(x, v, t, t_prev, model.schedule, &z);
    } else {
      x = reverse_step_from_v(x, v, t, t_prev, model.schedule, nullptr);
    }
  }
  x.require_finite("sampled latent");
  return x;
}

}  // namespace dmsr
