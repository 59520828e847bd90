#pragma once

#include <vector>

#include "rduniband/types.hpp"

namespace rdu {

// A function tabulated on an ascending grid.
struct GridFunction {
  std::vector<double> grid;
  std::vector<double> values;
};

struct Grids {
  std::vector<double> theta;  // equally spaced on [a, 1-a]
  std::vector<double> y;      // equally spaced over the outcome range
};

// Throws DegenerateSample on an empty sample; n_theta == 1 returns {0.5}.
Grids make_grids(const ObservationSet& s, int n_theta, int n_y, double a);

// Clamp tabulated values into [0, 1].
GridFunction clip_unit(GridFunction f);

// Monotone rearrangement: ascending sort of the values (grid unchanged).
GridFunction rearrange_monotone(GridFunction f);

struct LeftInverse {
  double value = 0;
  bool saturated = false;  // no grid point reaches the level: top point used
};

// Smallest grid point whose value is >= theta (ties resolved by the smallest
// index). Saturates at the top grid point when the level is never reached.
LeftInverse left_inverse(const GridFunction& f, double theta);

}  // namespace rdu
