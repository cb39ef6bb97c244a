#pragma once

#include <random>
#include <string>
#include <vector>

#include "dmsr/tape.hpp"

namespace dmsr::nn {

using Rng = std::mt19937_64;

enum class Activation { kIdentity, kRelu, kSwish };

/// Collects pointers to every Parameter a model owns, in construction
/// order. Used by the optimizer and the checkpoint writer. Parameters are
/// owned by their layers and must stay at a stable address.
struct ParamRegistry {
  std::vector<Parameter*> params;
  void track(Parameter& p) { params.push_back(&p); }
  size_t scalar_count() const;
  void zero_grads();
};

Tensor uniform_init(int rows, int cols, Rng& rng);  // U(-1/sqrt(rows), +1/sqrt(rows))

// One row of the standard sinusoidal embedding for scalar position `pos`.
Tensor sinusoidal_embedding(float pos, int dim);
// M rows of sinusoidal position codes.
Tensor positional_encoding(int length, int dim);

// Identity when !training or rate == 0; otherwise multiplies by a seeded
// 0/1 mask scaled by 1/(1-rate) (inverted dropout).
Tape::NodeId apply_dropout(Tape& t, Tape::NodeId x, float rate, Rng& rng, bool training);

// Additive attention mask row (1xM): 0 where attendable, -1e9 where padded.
Tensor attention_mask_row(const std::vector<bool>& real_token);

struct Dense {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out
  Dense(ParamRegistry& reg, Rng& rng, int in, int out, const std::string& name,
        bool zero_init = false);
  Tape::NodeId forward(Tape& t, Tape::NodeId x) const;
};

struct GroupNorm {
  Parameter gamma;  // 1 x C
  Parameter beta;   // 1 x C
  int groups;
  float eps;
  GroupNorm(ParamRegistry& reg, int channels, int groups, const std::string& name,
            float eps = 1e-5f);
  Tape::NodeId forward(Tape& t, Tape::NodeId x) const;
};

/// Scaled dot-product multi-head attention. Query and key/value streams may
/// have different widths; output width equals query width.
struct MultiHeadAttention {
  Dense proj_q, proj_k, proj_v, proj_out;
  int heads;
  int head_dim;
  MultiHeadAttention(ParamRegistry& reg, Rng& rng, int query_dim, int kv_dim, int heads,
                     int head_dim, const std::string& name);
  // mask: 1 x (kv rows) additive mask node, or -1 for none.
  Tape::NodeId forward(Tape& t, Tape::NodeId q_in, Tape::NodeId kv_in,
                       Tape::NodeId mask = -1) const;
};

struct FeedForward {
  Dense fc1, fc2;
  Activation act;
  FeedForward(ParamRegistry& reg, Rng& rng, int dim, int hidden, Activation act,
              const std::string& name);
  Tape::NodeId forward(Tape& t, Tape::NodeId x) const;
};

Tape::NodeId activate(Tape& t, Tape::NodeId x, Activation act);

}  // namespace dmsr::nn
