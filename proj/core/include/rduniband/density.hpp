#pragma once

#include <vector>

#include "rduniband/kernels.hpp"
#include "rduniband/types.hpp"

namespace rdu {

// (1/(n b)) sum_i K(x_i / b). Throws DegenerateDensity when no mass falls in
// the window.
double kde_at_zero(const std::vector<double>& x, double b, Kernel kernel);

// 1.06 * sd(x) * n^exponent. Throws DegenerateSample when sd(x) == 0 or the
// sample has fewer than two points.
double silverman_bandwidth(const std::vector<double>& x, double exponent);

enum class DensitySide { plus, minus, pooled };

// f_{Y|X}(y | x=0, side): ratio of the boundary bivariate sum
// (1/(n a^2)) sum K(x/a) K((y_i-y)/a) to the marginal (1/(n a)) sum K(x/a),
// restricted to the side (pooled = no restriction). Throws DegenerateDensity
// when the marginal sum vanishes.
double cond_density_at_cutoff(const ObservationSet& s, double y,
                              DensitySide side, double a, Kernel kernel);

// f_{Y|X,D}(y | 0 side, d) * P(D = d | 0 side). The conditional density uses
// bandwidth a on both axes, the probability is a Nadaraya-Watson ratio at
// bandwidth c. A cell with zero kernel mass for arm d contributes 0 (the
// empty-cell limit); a zero pooled NW denominator throws DegenerateCell.
double cell_density_times_prob(const ObservationSet& s, double y, int d,
                               Side side, double a, double c, Kernel kernel);

// Signed complier outcome density at y for arm d: the cell products
// differenced across the cutoff, divided by jump_d for d = 1 and by -jump_d
// for d = 0 (so the d = 0 value estimates the negative of the density).
// Throws WeakFirstStage when |jump_d| <= eps.
double complier_density(const ObservationSet& s, double y, int d, double jump_d,
                        double a, double c, Kernel kernel, double eps = 1e-6);

}  // namespace rdu
