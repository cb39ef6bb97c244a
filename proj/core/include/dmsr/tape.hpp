#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dmsr/tensor.hpp"

namespace dmsr::nn {

/// Trainable weight with its accumulated gradient. Layers own their
/// Parameters; a ParamRegistry collects pointers for the optimizer and
/// checkpointing, so Parameters must not move after registration.
struct Parameter {
  Tensor value;
  Tensor grad;
  std::string name;

  Parameter() = default;
  Parameter(Tensor v, std::string n)
      : value(std::move(v)), grad(value.rows, value.cols), name(std::move(n)) {}

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0f); }
};

/// Reverse-mode autodiff over a linear tape. Each op appends one node
/// holding its output value; backward() walks the tape in reverse and
/// accumulates into node grads and, for param leaves, into Parameter::grad.
///
/// The tape is built fresh for every forward pass. backward() may be called
/// once per tape; a second call without a new forward is a StateError.
class Tape {
 public:
  using NodeId = int;

  NodeId constant(Tensor v);
  NodeId param(Parameter& p);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, float s);
  // y[r,:] = a[r,:] + v[0,:]
  NodeId add_row(NodeId a, NodeId v);
  // y[r,:] = a[r,:] * v[0,:]
  NodeId mul_row(NodeId a, NodeId v);
  NodeId matmul(NodeId a, NodeId b);     // (r,k)x(k,c)
  NodeId matmul_nt(NodeId a, NodeId b);  // A * B^T : (r,k)x(c,k) -> (r,c)
  NodeId softmax_rows(NodeId a);
  NodeId relu(NodeId a);
  NodeId swish(NodeId a);
  // Per-group normalization to zero mean / unit variance, pre-affine.
  // Groups partition the column (channel) axis; statistics pool over all
  // rows and the group's columns.
  NodeId group_norm(NodeId a, int groups, float eps = 1e-5f);
  NodeId slice_cols(NodeId a, int first, int count);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  // Gather rows of an embedding table; backward scatter-adds.
  NodeId embedding_rows(Parameter& table, const std::vector<int>& ids);
  NodeId sum_all(NodeId a);  // -> 1x1
  // mean((a - target)^2) over all elements -> 1x1
  NodeId mse(NodeId a, const Tensor& target);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every reachable
  // Parameter. `loss` must be 1x1 and finite.
  void backward(NodeId loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, Node&)> backprop;  // empty for leaves
    Parameter* param = nullptr;
  };

  NodeId push(Tensor value, std::function<void(Tape&, Node&)> backprop);
  Tensor& grad_mut(NodeId id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace dmsr::nn
