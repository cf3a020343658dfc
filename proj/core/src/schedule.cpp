#include "fishforge/schedule.hpp"

#include <cmath>
#include <numbers>

#include "fishforge/error.hpp"

namespace fishforge {

void LrSchedule::validate() const {
  if (!(lr_min >= 0.0 && lr_min < lr_max)) {
    throw ConfigError("learning rates must satisfy 0 <= lr_min < lr_max");
  }
  if (!(warmup >= 0.0)) throw ConfigError("warmup must be >= 0");
  if (!(cycle > 0.0)) throw ConfigError("cycle length must be > 0");
}

double lr_at(double step, const LrSchedule& s) {
  if (step < 0.0) step = 0.0;
  if (step < s.warmup) return s.lr_max * step / s.warmup;
  const double since = step - s.warmup;
  double t = std::fmod(since, s.cycle);
  if (t == 0.0 && since > 0.0) t = s.cycle;
  return s.lr_min +
         0.5 * (s.lr_max - s.lr_min) * (1.0 + std::cos(std::numbers::pi * t / s.cycle));
}

}  // namespace fishforge
