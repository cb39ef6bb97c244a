#include "dmsr/tape.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "dmsr/errors.hpp"

namespace dmsr::nn {

namespace {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap as_eigen(const Tensor& t) { return CMap(t.data.data(), t.rows, t.cols); }
Map as_eigen(Tensor& t) { return Map(t.data.data(), t.rows, t.cols); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ConfigError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                      b.shape_str());
}

}  // namespace

Tape::NodeId Tape::push(Tensor value, std::function<void(Tape&, Node&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  backward_done_ = false;
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::constant(Tensor v) { return push(std::move(v), nullptr); }

Tape::NodeId Tape::param(Parameter& p) {
  NodeId id = push(p.value, nullptr);
  nodes_[id].param = &p;
  return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  check_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  as_eigen(out) += as_eigen(value(b));
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)) += as_eigen(n.grad);
    as_eigen(t.grad_mut(b)) += as_eigen(n.grad);
  });
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  check_same_shape(value(a), value(b), "sub");
  Tensor out = value(a);
  as_eigen(out) -= as_eigen(value(b));
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)) += as_eigen(n.grad);
    as_eigen(t.grad_mut(b)) -= as_eigen(n.grad);
  });
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  check_same_shape(value(a), value(b), "mul");
  Tensor out = value(a);
  as_eigen(out).array() *= as_eigen(value(b)).array();
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)).array() += as_eigen(n.grad).array() * as_eigen(t.value(b)).array();
    as_eigen(t.grad_mut(b)).array() += as_eigen(n.grad).array() * as_eigen(t.value(a)).array();
  });
}

Tape::NodeId Tape::scale(NodeId a, float s) {
  Tensor out = value(a);
  as_eigen(out) *= s;
  return push(std::move(out), [a, s](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)) += s * as_eigen(n.grad);
  });
}

Tape::NodeId Tape::add_row(NodeId a, NodeId v) {
  const Tensor& av = value(a);
  const Tensor& vv = value(v);
  if (vv.rows != 1 || vv.cols != av.cols)
    throw ConfigError("add_row: vector must be 1x" + std::to_string(av.cols) + ", got " +
                      vv.shape_str());
  Tensor out = av;
  as_eigen(out).rowwise() += as_eigen(vv).row(0);
  return push(std::move(out), [a, v](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)) += as_eigen(n.grad);
    as_eigen(t.grad_mut(v)).row(0) += as_eigen(n.grad).colwise().sum();
  });
}

Tape::NodeId Tape::mul_row(NodeId a, NodeId v) {
  const Tensor& av = value(a);
  const Tensor& vv = value(v);
  if (vv.rows != 1 || vv.cols != av.cols)
    throw ConfigError("mul_row: vector must be 1x" + std::to_string(av.cols) + ", got " +
                      vv.shape_str());
  Tensor out = av;
  as_eigen(out).array().rowwise() *= as_eigen(vv).row(0).array();
  return push(std::move(out), [a, v](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)).array() +=
        as_eigen(n.grad).array().rowwise() * as_eigen(t.value(v)).row(0).array();
    as_eigen(t.grad_mut(v)).row(0) +=
        (as_eigen(n.grad).array() * as_eigen(t.value(a)).array()).colwise().sum().matrix();
  });
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols != bv.rows)
    throw ConfigError("matmul: inner dims " + av.shape_str() + " x " + bv.shape_str());
  Tensor out(av.rows, bv.cols);
  as_eigen(out).noalias() = as_eigen(av) * as_eigen(bv);
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)).noalias() += as_eigen(n.grad) * as_eigen(t.value(b)).transpose();
    as_eigen(t.grad_mut(b)).noalias() += as_eigen(t.value(a)).transpose() * as_eigen(n.grad);
  });
}

Tape::NodeId Tape::matmul_nt(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols != bv.cols)
    throw ConfigError("matmul_nt: inner dims " + av.shape_str() + " x " + bv.shape_str() + "^T");
  Tensor out(av.rows, bv.rows);
  as_eigen(out).noalias() = as_eigen(av) * as_eigen(bv).transpose();
  return push(std::move(out), [a, b](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)).noalias() += as_eigen(n.grad) * as_eigen(t.value(b));
    as_eigen(t.grad_mut(b)).noalias() += as_eigen(n.grad).transpose() * as_eigen(t.value(a));
  });
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
  Tensor out = value(a);
  for (int r = 0; r < out.rows; ++r) {
    float* row = out.row(r);
    float mx = row[0];
    for (int c = 1; c < out.cols; ++c) mx = std::max(mx, row[c]);
    float sum = 0.0f;
    for (int c = 0; c < out.cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (int c = 0; c < out.cols; ++c) row[c] /= sum;
  }
  return push(std::move(out), [a](Tape& t, Node& n) {
    const Tensor& y = n.value;
    Tensor& da = t.grad_mut(a);
    for (int r = 0; r < y.rows; ++r) {
      float inner = dot(n.grad.row(r), y.row(r), y.cols);
      for (int c = 0; c < y.cols; ++c)
        da.at(r, c) += y.at(r, c) * (n.grad.at(r, c) - inner);
    }
  });
}

Tape::NodeId Tape::relu(NodeId a) {
  Tensor out = value(a);
  for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
  return push(std::move(out), [a](Tape& t, Node& n) {
    const Tensor& x = t.value(a);
    Tensor& da = t.grad_mut(a);
    for (size_t i = 0; i < x.size(); ++i)
      if (x.data[i] > 0.0f) da.data[i] += n.grad.data[i];
  });
}

Tape::NodeId Tape::swish(NodeId a) {
  Tensor out = value(a);
  for (float& v : out.data) v = v / (1.0f + std::exp(-v));
  return push(std::move(out), [a](Tape& t, Node& n) {
    const Tensor& x = t.value(a);
    Tensor& da = t.grad_mut(a);
    for (size_t i = 0; i < x.size(); ++i) {
      float sig = 1.0f / (1.0f + std::exp(-x.data[i]));
      da.data[i] += n.grad.data[i] * sig * (1.0f + x.data[i] * (1.0f - sig));
    }
  });
}

Tape::NodeId Tape::group_norm(NodeId a, int groups, float eps) {
  const Tensor& x = value(a);
  if (groups <= 0 || x.cols % groups != 0)
    throw ConfigError("group_norm: " + std::to_string(groups) + " groups does not divide " +
                      std::to_string(x.cols) + " channels");
  int gw = x.cols / groups;
  Tensor out(x.rows, x.cols);
  std::vector<float> inv_std(groups);
  for (int g = 0; g < groups; ++g) {
    double sum = 0.0, sq = 0.0;
    for (int r = 0; r < x.rows; ++r)
      for (int c = g * gw; c < (g + 1) * gw; ++c) {
        sum += x.at(r, c);
        sq += static_cast<double>(x.at(r, c)) * x.at(r, c);
      }
    double m = static_cast<double>(x.rows) * gw;
    double mean = sum / m;
    double var = sq / m - mean * mean;
    float istd = 1.0f / std::sqrt(static_cast<float>(var) + eps);
    inv_std[g] = istd;
    for (int r = 0; r < x.rows; ++r)
      for (int c = g * gw; c < (g + 1) * gw; ++c)
        out.at(r, c) = (x.at(r, c) - static_cast<float>(mean)) * istd;
  }
  return push(std::move(out), [a, groups, gw, inv_std](Tape& t, Node& n) {
    const Tensor& y = n.value;  // normalized values
    Tensor& da = t.grad_mut(a);
    for (int g = 0; g < groups; ++g) {
      double gsum = 0.0, gysum = 0.0;
      for (int r = 0; r < y.rows; ++r)
        for (int c = g * gw; c < (g + 1) * gw; ++c) {
          gsum += n.grad.at(r, c);
          gysum += static_cast<double>(n.grad.at(r, c)) * y.at(r, c);
        }
      double m = static_cast<double>(y.rows) * gw;
      float gmean = static_cast<float>(gsum / m);
      float gymean = static_cast<float>(gysum / m);
      for (int r = 0; r < y.rows; ++r)
        for (int c = g * gw; c < (g + 1) * gw; ++c)
          da.at(r, c) +=
              inv_std[g] * (n.grad.at(r, c) - gmean - y.at(r, c) * gymean);
    }
  });
}

Tape::NodeId Tape::slice_cols(NodeId a, int first, int count) {
  const Tensor& x = value(a);
  if (first < 0 || count <= 0 || first + count > x.cols)
    throw ConfigError("slice_cols: [" + std::to_string(first) + "," +
                      std::to_string(first + count) + ") out of " + x.shape_str());
  Tensor out(x.rows, count);
  as_eigen(out) = as_eigen(x).middleCols(first, count);
  return push(std::move(out), [a, first, count](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)).middleCols(first, count) += as_eigen(n.grad);
  });
}

Tape::NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ConfigError("concat_cols: empty");
  int rows = value(parts[0]).rows;
  int cols = 0;
  for (NodeId p : parts) {
    if (value(p).rows != rows) throw ConfigError("concat_cols: row mismatch");
    cols += value(p).cols;
  }
  Tensor out(rows, cols);
  int off = 0;
  for (NodeId p : parts) {
    as_eigen(out).middleCols(off, value(p).cols) = as_eigen(value(p));
    off += value(p).cols;
  }
  return push(std::move(out), [parts](Tape& t, Node& n) {
    int off = 0;
    for (NodeId p : parts) {
      int w = t.value(p).cols;
      as_eigen(t.grad_mut(p)) += as_eigen(n.grad).middleCols(off, w);
      off += w;
    }
  });
}

Tape::NodeId Tape::embedding_rows(Parameter& table, const std::vector<int>& ids) {
  Tensor out(static_cast<int>(ids.size()), table.value.cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.value.rows)
      throw ConfigError("embedding_rows: id " + std::to_string(ids[i]) + " out of range for " +
                        table.name);
    std::copy(table.value.row(ids[i]), table.value.row(ids[i]) + table.value.cols, out.row(i));
  }
  Parameter* tp = &table;
  return push(std::move(out), [tp, ids](Tape&, Node& n) {
    for (size_t i = 0; i < ids.size(); ++i)
      for (int c = 0; c < n.grad.cols; ++c)
        tp->grad.at(ids[i], c) += n.grad.at(static_cast<int>(i), c);
  });
}

Tape::NodeId Tape::sum_all(NodeId a) {
  float s = as_eigen(value(a)).sum();
  return push(Tensor::scalar(s), [a](Tape& t, Node& n) {
    as_eigen(t.grad_mut(a)).array() += n.grad.data[0];
  });
}

Tape::NodeId Tape::mse(NodeId a, const Tensor& target) {
  check_same_shape(value(a), target, "mse");
  const Tensor& x = value(a);
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double d = static_cast<double>(x.data[i]) - target.data[i];
    acc += d * d;
  }
  float inv_n = 1.0f / static_cast<float>(x.size());
  Tensor tgt = target;
  return push(Tensor::scalar(static_cast<float>(acc) * inv_n),
              [a, tgt = std::move(tgt), inv_n](Tape& t, Node& n) {
                const Tensor& x = t.value(a);
                Tensor& da = t.grad_mut(a);
                float c = 2.0f * inv_n * n.grad.data[0];
                for (size_t i = 0; i < x.size(); ++i)
                  da.data[i] += c * (x.data[i] - tgt.data[i]);
              });
}

void Tape::backward(NodeId loss) {
  if (backward_done_)
    throw StateError("Tape::backward called twice without a new forward pass");
  if (loss < 0 || loss >= static_cast<NodeId>(nodes_.size()))
    throw StateError("Tape::backward: invalid loss node");
  if (nodes_[loss].value.size() != 1)
    throw StateError("Tape::backward: loss must be scalar, got " +
                     nodes_[loss].value.shape_str());
  nodes_[loss].value.require_finite("loss");
  for (Node& n : nodes_) {
    n.grad = Tensor(n.value.rows, n.value.cols);
  }
  nodes_[loss].grad.data[0] = 1.0f;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backprop) n.backprop(*this, n);
  }
  // param leaves accumulate at the end so repeated param() of the same
  // Parameter on one tape sum correctly
  for (Node& n : nodes_) {
    if (n.param) as_eigen(n.param->grad) += as_eigen(n.grad);
  }
  backward_done_ = true;
}

}  // namespace dmsr::nn
