#pragma once

#include <string>
#include <vector>

namespace dmsr {

enum class ScheduleKind { kLinear, kCosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

/// Precomputed variance schedule. Arrays are 1-based conceptually: index
/// t-1 holds the value for diffusion step t in [1, T]. alpha_bar(0) == 1.
struct DiffusionSchedule {
  int T = 0;
  std::vector<float> beta;
  std::vector<float> alpha;
  std::vector<float> alpha_bar;
  std::vector<float> signal;       // sqrt(alpha_bar)
  std::vector<float> noise_scale;  // sqrt(1 - alpha_bar)

  float beta_at(int t) const { return beta[t - 1]; }
  float alpha_at(int t) const { return alpha[t - 1]; }
  // alpha_bar with the t = 0 convention alpha_bar(0) = 1
  float alpha_bar_at(int t) const { return t == 0 ? 1.0f : alpha_bar[t - 1]; }
  float signal_at(int t) const { return t == 0 ? 1.0f : signal[t - 1]; }
  float noise_at(int t) const { return t == 0 ? 0.0f : noise_scale[t - 1]; }
};

/// Builds a schedule of length T >= 2.
///
/// linear: beta linearly spaced between endpoints scaled by 1000/T (so the
/// terminal alpha_bar stays near zero at any T; at T = 1000 the endpoints
/// are exactly 1e-4 and 0.02). cosine: alpha_bar follows the squared-cosine
/// profile with offset 0.008. Both clip beta to [1e-8, 0.999].
DiffusionSchedule make_schedule(ScheduleKind kind, int T);

}  // namespace dmsr
