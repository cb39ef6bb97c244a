#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dmsr::nn {

/// Dense row-major float32 matrix. Rank is at most 2; scalars are 1x1 and
/// row vectors are 1xC. All activations, parameters and gradients use this
/// one representation.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0f) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor scalar(float v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor from_rows(const std::vector<std::vector<float>>& rows_in);

  size_t size() const { return data.size(); }
  float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  const float* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  float* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
  std::string shape_str() const;

  // Throws StateError naming `what` if any entry is NaN or Inf.
  void require_finite(const std::string& what) const;
};

float dot(const float* a, const float* b, int n);
float l2_norm(const float* a, int n);

}  // namespace dmsr::nn
