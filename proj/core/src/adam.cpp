#include "dmsr/adam.hpp"

#include <cmath>

#include "dmsr/errors.hpp"

namespace dmsr::nn {

void Adam::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.rows, p->value.cols);
      v_.emplace_back(p->value.rows, p->value.cols);
    }
  }
  if (m_.size() != params.size())
    throw StateError("Adam::step: parameter list changed size");
  for (const Parameter* p : params)
    if (!p->grad.all_finite())
      throw StateError("Adam::step: non-finite gradient in " + p->name);

  ++step_count_;
  float t = static_cast<float>(step_count_);
  float bc1 = 1.0f - std::pow(beta1_, t);
  float bc2 = 1.0f - std::pow(beta2_, t);
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    for (size_t j = 0; j < p.value.size(); ++j) {
      float g = p.grad.data[j];
      m_[i].data[j] = beta1_ * m_[i].data[j] + (1.0f - beta1_) * g;
      v_[i].data[j] = beta2_ * v_[i].data[j] + (1.0f - beta2_) * g * g;
      float mhat = m_[i].data[j] / bc1;
      float vhat = v_[i].data[j] / bc2;
      p.value.data[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p.zero_grad();
  }
}

}  // namespace dmsr::nn
