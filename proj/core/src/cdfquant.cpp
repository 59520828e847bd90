#include "rduniband/cdfquant.hpp"

#include <algorithm>
#include <stdexcept>

namespace rdu {

Grids make_grids(const ObservationSet& s, int n_theta, int n_y, double a) {
  if (s.size() == 0) throw DegenerateSample("make_grids: empty sample");
  if (n_theta < 1 || n_y < 2) throw std::invalid_argument("make_grids: grid sizes");
  if (!(a >= 0 && a < 0.5)) throw std::invalid_argument("make_grids: trim a outside [0, 0.5)");
  Grids g;
  g.theta.resize(n_theta);
  if (n_theta == 1) {
    g.theta[0] = 0.5;
  } else {
    double lo = a, hi = 1.0 - a;
    for (int j = 0; j < n_theta; ++j)
      g.theta[j] = lo + (hi - lo) * j / (n_theta - 1);
  }
  auto [mn, mx] = std::minmax_element(s.y.begin(), s.y.end());
  g.y.resize(n_y);
  for (int j = 0; j < n_y; ++j)
    g.y[j] = *mn + (*mx - *mn) * j / (n_y - 1);
  return g;
}

GridFunction clip_unit(GridFunction f) {
  for (double& v : f.values) v = std::clamp(v, 0.0, 1.0);
  return f;
}

GridFunction rearrange_monotone(GridFunction f) {
  std::sort(f.values.begin(), f.values.end());
  return f;
}

LeftInverse left_inverse(const GridFunction& f, double theta) {
  if (f.grid.empty() || f.grid.size() != f.values.size())
    throw std::invalid_argument("left_inverse: bad grid function");
  for (std::size_t j = 0; j < f.values.size(); ++j)
    if (f.values[j] >= theta) return {f.grid[j], false};
  return {f.grid.back(), true};
}

}  // namespace rdu
