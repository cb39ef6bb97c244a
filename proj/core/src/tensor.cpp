#include "dmsr/tensor.hpp"

#include <cmath>

#include "dmsr/errors.hpp"

namespace dmsr::nn {

Tensor Tensor::from_rows(const std::vector<std::vector<float>>& rows_in) {
  Tensor t(static_cast<int>(rows_in.size()),
           rows_in.empty() ? 0 : static_cast<int>(rows_in[0].size()));
  for (int r = 0; r < t.rows; ++r) {
    if (static_cast<int>(rows_in[r].size()) != t.cols)
      throw ConfigError("Tensor::from_rows: ragged input");
    for (int c = 0; c < t.cols; ++c) t.at(r, c) = rows_in[r][c];
  }
  return t;
}

bool Tensor::all_finite() const {
  for (float v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void Tensor::require_finite(const std::string& what) const {
  if (!all_finite()) throw StateError("non-finite values in " + what);
}

float dot(const float* a, const float* b, int n) {
  float s = 0.0f;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

float l2_norm(const float* a, int n) { return std::sqrt(dot(a, a, n)); }

}  // namespace dmsr::nn
