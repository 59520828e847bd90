#include "rduniband/designs.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "rduniband/dgp_sim.hpp"

namespace {

using rdu::Bandwidths;
using rdu::DesignSpec;
using rdu::Family;

// Symmetric grid that avoids x == 0 exactly: the cutoff point belongs to
// both one-sided windows, so a discontinuous test response there would
// contaminate the minus side.
rdu::ObservationSet grid_data(int n_per_side, double span) {
  rdu::ObservationSet s;
  for (int i = -n_per_side; i <= n_per_side; ++i) {
    if (i == 0) continue;
    s.x.push_back(span * (i > 0 ? i - 0.5 : i + 0.5) / n_per_side);
  }
  s.y.resize(s.x.size());
  return s;
}

TEST(Designs, SmrdRecoversExactJump) {
  rdu::ObservationSet s = grid_data(40, 1.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.y[i] = 1.0 + s.x[i] + (s.x[i] >= 0 ? 1.0 : 0.0);
  DesignSpec spec;
  spec.family = Family::smrd;
  Bandwidths bw;
  bw.h1 = 0.8;
  rdu::EstimateResult est = rdu::estimate(s, spec, bw);
  ASSERT_EQ(est.tau.size(), 1u);
  EXPECT_NEAR(est.tau[0], 1.0, 1e-10);
  EXPECT_NEAR(est.jump_num, 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(est.jump_den, 1.0);
  EXPECT_EQ(est.v, 0);
  EXPECT_NEAR(est.stat_scale, std::sqrt(s.size() * 0.8), 1e-12);
  EXPECT_EQ(est.scores.rows(), static_cast<Eigen::Index>(s.size()));
  EXPECT_EQ(est.scores.cols(), 1);
}

TEST(Designs, SmrkRecoversExactSlopeJump) {
  rdu::ObservationSet s = grid_data(40, 1.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.y[i] = 0.3 + 1.5 * std::abs(s.x[i]) - 0.2 * s.x[i];
  DesignSpec spec;
  spec.family = Family::smrk;
  spec.known_slope_jump = 2.0;
  Bandwidths bw;
  bw.h1 = 0.9;
  rdu::EstimateResult est = rdu::estimate(s, spec, bw);
  EXPECT_NEAR(est.tau[0], 1.5, 1e-9);  // slope jump 3.0 over known jump 2.0
  EXPECT_EQ(est.v, 1);
  EXPECT_NEAR(est.stat_scale, std::sqrt(s.size() * std::pow(0.9, 3)), 1e-12);
}

TEST(Designs, FmrdHadamardCoefficients) {
  rdu::ObservationSet s = grid_data(40, 1.0);
  s.d.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.y[i] = 0.5 + 0.1 * s.x[i] + 0.25 * (s.x[i] >= 0 ? 1.0 : 0.0);
    s.d[i] = 0.2 + 0.5 * (s.x[i] >= 0 ? 1.0 : 0.0);
  }
  DesignSpec spec;
  spec.family = Family::fmrd;
  Bandwidths bw;
  bw.h1 = 0.8;
  rdu::EstimateResult est = rdu::estimate(s, spec, bw);
  EXPECT_NEAR(est.jump_num, 0.25, 1e-10);
  EXPECT_NEAR(est.jump_den, 0.5, 1e-10);
  EXPECT_NEAR(est.tau[0], 0.5, 1e-9);
  rdu::HadamardCoefficients had = rdu::hadamard_coefficients(s, spec, bw);
  ASSERT_EQ(had.terms, (std::vector<std::string>{"num", "den"}));
  EXPECT_NEAR(had.coef(0, 0), 2.0, 1e-8);    // 1 / B
  EXPECT_NEAR(had.coef(0, 1), -1.0, 1e-8);   // -A / B^2
}

TEST(Designs, GfmrdSingleGroupMatchesFmrdExactly) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::fmrd_simple;
  dgp.n = 600;
  dgp.beta1 = 0.3;
  rdu::ObservationSet s = rdu::generate(dgp, 17);
  rdu::ObservationSet sg = s;
  sg.g.assign(sg.size(), 1);

  Bandwidths bw;
  bw.h1 = 0.9;
  bw.h2 = 0.7;
  DesignSpec fmrd;
  fmrd.family = Family::fmrd;
  DesignSpec gfmrd;
  gfmrd.family = Family::gfmrd;

  rdu::EstimateResult a = rdu::estimate(s, fmrd, bw);
  rdu::EstimateResult b = rdu::estimate(sg, gfmrd, bw);
  ASSERT_EQ(b.tau.size(), 1u);
  EXPECT_DOUBLE_EQ(a.tau[0], b.tau[0]);
  ASSERT_EQ(a.scores.rows(), b.scores.rows());
  EXPECT_TRUE((a.scores.array() == b.scores.array()).all());
}

TEST(Designs, FqrdSharpComplianceMatchesSqrd) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::sqrd_simple;
  dgp.n = 1200;
  dgp.beta1 = 0.4;
  dgp.gamma1 = 0.5;
  rdu::ObservationSet s = rdu::generate(dgp, 23);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.d[i] = s.x[i] >= 0 ? 1.0 : 0.0;  // sharp compliance

  Bandwidths bw;
  bw.h1 = 0.8;
  bw.h2 = 0.8;
  DesignSpec sqrd;
  sqrd.family = Family::sqrd;
  sqrd.n_theta = 9;
  DesignSpec fqrd = sqrd;
  fqrd.family = Family::fqrd;

  rdu::EstimateResult a = rdu::estimate(s, sqrd, bw);
  rdu::EstimateResult b = rdu::estimate(s, fqrd, bw);
  ASSERT_EQ(a.tau.size(), b.tau.size());
  for (std::size_t j = 0; j < a.tau.size(); ++j) {
    EXPECT_NEAR(b.tau[j], a.tau[j], 1e-8) << "theta=" << a.eval[j];
    EXPECT_LT((b.scores.col(j) - a.scores.col(j)).lpNorm<Eigen::Infinity>(),
              1e-6);
  }
}

TEST(Designs, ScrdFrozenStepContrast) {
  rdu::ObservationSet s = grid_data(25, 1.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.y[i] = s.x[i] >= 0 ? 2.0 : 1.0;
  DesignSpec spec;
  spec.family = Family::scrd;
  spec.n_y = 5;
  Bandwidths bw;
  bw.h1 = 1.0;
  rdu::EstimateResult est = rdu::estimate(s, spec, bw);
  ASSERT_EQ(est.tau.size(), 5u);
  // Grid spans [1, 2]; F-(y) = 1 everywhere on it, F+(y) = 1{y >= 2}.
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(est.tau[j], -1.0, 1e-9);
  EXPECT_NEAR(est.tau[4], 0.0, 1e-9);
}

TEST(Designs, PerPointBandwidthsMatchScalarWhenEqual) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::sqrd_simple;
  dgp.n = 500;
  rdu::ObservationSet s = rdu::generate(dgp, 31);
  DesignSpec spec;
  spec.family = Family::sqrd;
  spec.n_theta = 7;
  Bandwidths scalar;
  scalar.h1 = 0.9;
  Bandwidths per = scalar;
  per.h1_per_point.assign(7, 0.9);
  rdu::EstimateResult a = rdu::estimate(s, spec, scalar);
  rdu::EstimateResult b = rdu::estimate(s, spec, per);
  for (std::size_t j = 0; j < a.tau.size(); ++j)
    EXPECT_DOUBLE_EQ(a.tau[j], b.tau[j]);
}

TEST(Designs, ValidationErrors) {
  rdu::ObservationSet s = grid_data(20, 1.0);
  DesignSpec fmrd;
  fmrd.family = Family::fmrd;
  EXPECT_THROW(rdu::validate_design(fmrd, s), std::invalid_argument);

  DesignSpec smrk;
  smrk.family = Family::smrk;
  EXPECT_THROW(rdu::validate_design(smrk, s), rdu::MissingSlopeJump);

  rdu::ObservationSet sd = s;
  sd.d.assign(sd.size(), 0.5);
  DesignSpec fqrd;
  fqrd.family = Family::fqrd;
  EXPECT_THROW(rdu::validate_design(fqrd, sd), std::invalid_argument);

  DesignSpec low_order;
  low_order.family = Family::smrk;
  low_order.known_slope_jump = 2.0;
  low_order.p = 1;  // kink target needs order > v = 1
  EXPECT_THROW(rdu::validate_design(low_order, s), std::invalid_argument);
}

TEST(Designs, ComponentSummaries) {
  rdu::DgpSpec dgp;
  dgp.family = rdu::Dgp::fmrd_simple;
  dgp.n = 800;
  dgp.beta1 = 0.5;
  rdu::ObservationSet s = rdu::generate(dgp, 41);
  DesignSpec spec;
  spec.family = Family::fmrd;
  Bandwidths bw;
  bw.h1 = 0.9;
  rdu::WaldComponents comps = rdu::estimate_components(s, spec, bw);
  ASSERT_EQ(comps.comps.size(), 2u);
  rdu::EstimateResult est = rdu::estimate(s, spec, bw);
  EXPECT_NEAR(comps.comps[0].jump, est.jump_num, 1e-12);
  EXPECT_NEAR(comps.comps[1].jump, est.jump_den, 1e-12);
  EXPECT_GT(comps.f_x0, 0);
}

}  // namespace
