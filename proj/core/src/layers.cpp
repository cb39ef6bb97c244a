#include "dmsr/layers.hpp"

#include <cmath>

#include "dmsr/errors.hpp"

namespace dmsr::nn {

size_t ParamRegistry::scalar_count() const {
  size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

void ParamRegistry::zero_grads() {
  for (Parameter* p : params) p->zero_grad();
}

Tensor uniform_init(int rows, int cols, Rng& rng) {
  float bound = 1.0f / std::sqrt(static_cast<float>(rows));
  std::uniform_real_distribution<float> dist(-bound, bound);
  Tensor t(rows, cols);
  for (float& v : t.data) v = dist(rng);
  return t;
}

Tensor sinusoidal_embedding(float pos, int dim) {
  Tensor e(1, dim);
  int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    float freq = std::exp(-std::log(10000.0f) * static_cast<float>(i) / half);
    e.data[i] = std::sin(pos * freq);
    e.data[half + i] = std::cos(pos * freq);
  }
  return e;
}

Tensor positional_encoding(int length, int dim) {
  Tensor pe(length, dim);
  for (int p = 0; p < length; ++p) {
    Tensor row = sinusoidal_embedding(static_cast<float>(p), dim);
    std::copy(row.data.begin(), row.data.end(), pe.row(p));
  }
  return pe;
}

Tape::NodeId apply_dropout(Tape& t, Tape::NodeId x, float rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0f) return x;
  const Tensor& v = t.value(x);
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor mask(v.rows, v.cols);
  float inv = 1.0f / (1.0f - rate);
  for (float& m : mask.data) m = keep(rng) ? inv : 0.0f;
  return t.mul(x, t.constant(std::move(mask)));
}

Tensor attention_mask_row(const std::vector<bool>& real_token) {
  Tensor m(1, static_cast<int>(real_token.size()));
  for (size_t i = 0; i < real_token.size(); ++i) m.data[i] = real_token[i] ? 0.0f : -1e9f;
  return m;
}

Dense::Dense(ParamRegistry& reg, Rng& rng, int in, int out, const std::string& name,
             bool zero_init)
    : weight(zero_init ? Tensor::zeros(in, out) : uniform_init(in, out, rng),
             name + ".weight"),
      bias(Tensor::zeros(1, out), name + ".bias") {
  reg.track(weight);
  reg.track(bias);
}

Tape::NodeId Dense::forward(Tape& t, Tape::NodeId x) const {
  Parameter& w = const_cast<Parameter&>(weight);
  Parameter& b = const_cast<Parameter&>(bias);
  return t.add_row(t.matmul(x, t.param(w)), t.param(b));
}

GroupNorm::GroupNorm(ParamRegistry& reg, int channels, int groups_in, const std::string& name,
                     float eps_in)
    : gamma(Tensor(1, channels), name + ".gamma"),
      beta(Tensor::zeros(1, channels), name + ".beta"),
      groups(groups_in),
      eps(eps_in) {
  if (groups <= 0 || channels % groups != 0)
    throw ConfigError(name + ": group count " + std::to_string(groups) +
                      " must divide channels " + std::to_string(channels));
  std::fill(gamma.value.data.begin(), gamma.value.data.end(), 1.0f);
  reg.track(gamma);
  reg.track(beta);
}

Tape::NodeId GroupNorm::forward(Tape& t, Tape::NodeId x) const {
  Tape::NodeId n = t.group_norm(x, groups, eps);
  n = t.mul_row(n, t.param(const_cast<Parameter&>(gamma)));
  return t.add_row(n, t.param(const_cast<Parameter&>(beta)));
}

MultiHeadAttention::MultiHeadAttention(ParamRegistry& reg, Rng& rng, int query_dim, int kv_dim,
                                       int heads_in, int head_dim_in, const std::string& name)
    : proj_q(reg, rng, query_dim, heads_in * head_dim_in, name + ".q"),
      proj_k(reg, rng, kv_dim, heads_in * head_dim_in, name + ".k"),
      proj_v(reg, rng, kv_dim, heads_in * head_dim_in, name + ".v"),
      proj_out(reg, rng, heads_in * head_dim_in, query_dim, name + ".out"),
      heads(heads_in),
      head_dim(head_dim_in) {}

Tape::NodeId MultiHeadAttention::forward(Tape& t, Tape::NodeId q_in, Tape::NodeId kv_in,
                                         Tape::NodeId mask) const {
  Tape::NodeId q = proj_q.forward(t, q_in);
  Tape::NodeId k = proj_k.forward(t, kv_in);
  Tape::NodeId v = proj_v.forward(t, kv_in);
  float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(head_dim));
  std::vector<Tape::NodeId> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tape::NodeId qh = t.slice_cols(q, h * head_dim, head_dim);
    Tape::NodeId kh = t.slice_cols(k, h * head_dim, head_dim);
    Tape::NodeId vh = t.slice_cols(v, h * head_dim, head_dim);
    Tape::NodeId scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt);
    if (mask >= 0) scores = t.add_row(scores, mask);
    outs.push_back(t.matmul(t.softmax_rows(scores), vh));
  }
  return proj_out.forward(t, t.concat_cols(outs));
}

FeedForward::FeedForward(ParamRegistry& reg, Rng& rng, int dim, int hidden, Activation act_in,
                         const std::string& name)
    : fc1(reg, rng, dim, hidden, name + ".fc1"),
      fc2(reg, rng, hidden, dim, name + ".fc2"),
      act(act_in) {}

Tape::NodeId FeedForward::forward(Tape& t, Tape::NodeId x) const {
  return fc2.forward(t, activate(t, fc1.forward(t, x), act));
}

Tape::NodeId activate(Tape& t, Tape::NodeId x, Activation act) {
  switch (act) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return t.relu(x);
    case Activation::kSwish: return t.swish(x);
  }
  throw ConfigError("unknown activation");
}

}  // namespace dmsr::nn
