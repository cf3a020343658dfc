#pragma once

namespace fishforge {

/// Linear warmup followed by cosine annealing with restarts. Positions are
/// measured in (fractional) epochs.
struct LrSchedule {
  double lr_min = 1e-5;
  double lr_max = 1e-3;
  double warmup = 5.0;
  double cycle = 25.0;

  void validate() const;
};

/// Learning rate at `step`:
///   step < warmup:  lr_max * step / warmup
///   otherwise:      lr_min + (lr_max - lr_min) (1 + cos(pi t / cycle)) / 2
/// where t is the position inside the current cycle; the last point of a
/// cycle (t == cycle) evaluates to lr_min before the next restart.
double lr_at(double step, const LrSchedule& schedule);

}  // namespace fishforge
