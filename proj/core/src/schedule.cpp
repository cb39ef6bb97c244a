#include "dmsr/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "dmsr/errors.hpp"

namespace dmsr {

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "cosine") return ScheduleKind::kCosine;
  throw ConfigError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
  return k == ScheduleKind::kLinear ? "linear" : "cosine";
}

DiffusionSchedule make_schedule(ScheduleKind kind, int T) {
  if (T < 2) throw ConfigError("make_schedule: T must be >= 2");
  DiffusionSchedule s;
  s.T = T;
  s.beta.resize(T);
  if (kind == ScheduleKind::kLinear) {
    float ref = 1000.0f / static_cast<float>(T);
    float b0 = 1e-4f * ref;
    float b1 = 0.02f * ref;
    for (int i = 0; i < T; ++i)
      s.beta[i] = b0 + (b1 - b0) * static_cast<float>(i) / static_cast<float>(T - 1);
  } else {
    auto abar = [T](int t) {
      double f = std::cos(((static_cast<double>(t) / T + 0.008) / 1.008) * M_PI / 2.0);
      return f * f;
    };
    double prev = abar(0);
    for (int i = 0; i < T; ++i) {
      double cur = abar(i + 1);
      s.beta[i] = static_cast<float>(1.0 - cur / prev);
      prev = cur;
    }
  }
  for (float& b : s.beta) b = std::clamp(b, 1e-8f, 0.999f);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  s.signal.resize(T);
  s.noise_scale.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    s.alpha[i] = 1.0f - s.beta[i];
    prod *= s.alpha[i];
    s.alpha_bar[i] = static_cast<float>(prod);
    s.signal[i] = static_cast<float>(std::sqrt(prod));
    s.noise_scale[i] = static_cast<float>(std::sqrt(1.0 - prod));
  }
  return s;
}

}  // namespace dmsr
