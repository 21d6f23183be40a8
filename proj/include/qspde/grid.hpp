#pragma once

#include <cmath>
#include <vector>

#include "qspde/errors.hpp"

namespace qspde {

// Uniform time grid t_i = t0 + i*h, i = 0..steps. All solver formulas are
// discretized on grid points; there is no temporal interpolation.
struct TimeGrid {
  double t0 = 0.0;
  double h = 0.0;
  int steps = 0;

  TimeGrid() = default;
  TimeGrid(double t0_, double h_, int steps_) : t0(t0_), h(h_), steps(steps_) {
    if (h <= 0.0 || steps < 1) throw InvalidArgument("TimeGrid: need h > 0 and steps >= 1");
  }

  double time(int i) const { return t0 + h * static_cast<double>(i); }
  double horizon() const { return time(steps); }
  int points() const { return steps + 1; }

  // Sub-grid of `count` steps starting at grid point `start`.
  TimeGrid window(int start, int count) const {
    if (start < 0 || count < 1 || start + count > steps)
      throw InvalidArgument("TimeGrid::window out of range");
    return TimeGrid(time(start), h, count);
  }
};

}  // namespace qspde
