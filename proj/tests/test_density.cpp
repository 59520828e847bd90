#include "rduniband/density.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "rduniband/rng.hpp"

namespace {

using rdu::Kernel;
using rdu::Side;

TEST(Density, KdeFrozenValue) {
  std::vector<double> x = {-0.5, 0.2, 0.8, 2.0};
  EXPECT_NEAR(rdu::kde_at_zero(x, 1.0, Kernel::epanechnikov), 0.388125, 1e-15);
}

TEST(Density, KdeGuards) {
  std::vector<double> far = {5.0, -7.0};
  EXPECT_THROW(rdu::kde_at_zero(far, 1.0, Kernel::epanechnikov),
               rdu::DegenerateDensity);
  EXPECT_THROW(rdu::kde_at_zero({}, 1.0, Kernel::epanechnikov),
               rdu::DegenerateSample);
  EXPECT_THROW(rdu::kde_at_zero({0.1}, -1.0, Kernel::epanechnikov),
               std::invalid_argument);
}

TEST(Density, SilvermanFrozenValue) {
  std::vector<double> x = {1, 2, 3, 4};
  // 1.06 * sd * n^{-1/5} with the n-1 sample standard deviation.
  EXPECT_NEAR(rdu::silverman_bandwidth(x, -0.2), 1.037094286807564, 1e-12);
  EXPECT_THROW(rdu::silverman_bandwidth({1.0, 1.0}, -0.2),
               rdu::DegenerateSample);
  EXPECT_THROW(rdu::silverman_bandwidth({1.0}, -0.2), rdu::DegenerateSample);
}

TEST(Density, ConditionalDensityRecoversGaussian) {
  // Y independent of X, both standard normal: f(y|0) = phi(y).
  rdu::Stream rng(99);
  rdu::ObservationSet s;
  for (int i = 0; i < 40000; ++i) {
    s.x.push_back(rng.normal());
    s.y.push_back(rng.normal());
  }
  double phi0 = 1.0 / std::sqrt(2.0 * M_PI);
  double f = rdu::cond_density_at_cutoff(s, 0.0, rdu::DensitySide::pooled, 0.25,
                                         Kernel::epanechnikov);
  EXPECT_NEAR(f, phi0, 0.03);
  double fp = rdu::cond_density_at_cutoff(s, 0.0, rdu::DensitySide::plus, 0.25,
                                          Kernel::epanechnikov);
  double fm = rdu::cond_density_at_cutoff(s, 0.0, rdu::DensitySide::minus, 0.25,
                                          Kernel::epanechnikov);
  EXPECT_NEAR(fp, phi0, 0.05);
  EXPECT_NEAR(fm, phi0, 0.05);
}

TEST(Density, CellProductEmptyArmIsZero) {
  rdu::ObservationSet s;
  s.x = {0.1, 0.2, 0.3, -0.1, -0.2};
  s.y = {1.0, 1.1, 0.9, 1.0, 1.2};
  s.d = {1, 1, 1, 0, 0};
  // No d=0 mass on the plus side: empty-cell limit.
  EXPECT_DOUBLE_EQ(rdu::cell_density_times_prob(s, 1.0, 0, Side::plus, 1.0, 1.0,
                                                Kernel::epanechnikov),
                   0.0);
  // d=1 on the plus side is populated.
  EXPECT_GT(rdu::cell_density_times_prob(s, 1.0, 1, Side::plus, 1.0, 1.0,
                                         Kernel::epanechnikov),
            0.0);
}

TEST(Density, CellProductThrowsOnEmptyWindow) {
  rdu::ObservationSet s;
  s.x = {0.1, 0.2};
  s.y = {1.0, 1.1};
  s.d = {1, 1};
  EXPECT_THROW(rdu::cell_density_times_prob(s, 1.0, 1, Side::minus, 1.0, 1.0,
                                            Kernel::epanechnikov),
               rdu::DegenerateCell);
}

TEST(Density, ComplierDensitySignConvention) {
  rdu::ObservationSet s;
  s.x = {0.1, 0.3, -0.1, -0.3};
  s.y = {1.0, 1.1, 1.0, 0.9};
  s.d = {1, 1, 0, 0};
  double jump = 1.0;  // first-stage arm-1 jump
  double d1 = rdu::complier_density(s, 1.0, 1, jump, 1.0, 1.0,
                                    Kernel::epanechnikov);
  // Sharp compliance: arm 1 fills the plus side, so the difference is the
  // plus-side cell value and the divisor is +jump.
  double plus_cell = rdu::cell_density_times_prob(s, 1.0, 1, Side::plus, 1.0,
                                                  1.0, Kernel::epanechnikov);
  EXPECT_NEAR(d1, plus_cell, 1e-14);
  // Arm 0: minus-side mass, divisor -jump, so the value is positive again.
  double d0 = rdu::complier_density(s, 1.0, 0, jump, 1.0, 1.0,
                                    Kernel::epanechnikov);
  double minus_cell = rdu::cell_density_times_prob(s, 1.0, 0, Side::minus, 1.0,
                                                   1.0, Kernel::epanechnikov);
  EXPECT_NEAR(d0, minus_cell, 1e-14);
  EXPECT_THROW(rdu::complier_density(s, 1.0, 1, 1e-9, 1.0, 1.0,
                                     Kernel::epanechnikov),
               rdu::WeakFirstStage);
}

}  // namespace
