#include "rduniband/localpoly.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using rdu::Kernel;
using rdu::Side;

double poly_eval(const std::vector<double>& a, double x) {
  double acc = 0, xp = 1;
  for (double c : a) {
    acc += c * xp;
    xp *= x;
  }
  return acc;
}

double factorial(int v) { return v == 0 ? 1.0 : v * factorial(v - 1); }

TEST(LocalPoly, ExactFitRecoversPolynomials) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int p : {1, 2, 3}) {
    for (int rep = 0; rep < 10; ++rep) {
      double h = 0.3 + unif(rng);
      std::vector<double> a(p + 1);
      for (auto& c : a) c = coef(rng);
      std::vector<double> x(60);
      Eigen::VectorXd y(60);
      for (int i = 0; i < 60; ++i) {
        x[i] = h * unif(rng) * (rep % 2 ? 1 : -1);
        y(i) = poly_eval(a, x[i]);
      }
      Side side = rep % 2 ? Side::plus : Side::minus;
      rdu::LocalFit fit =
          rdu::fit_one_sided(x, y, h, p, Kernel::epanechnikov, side);
      for (int v = 0; v <= p; ++v) {
        double want = factorial(v) * a[v];
        EXPECT_NEAR(fit.derivative(v), want, 1e-8 * std::max(1.0, std::abs(want)))
            << "p=" << p << " v=" << v << " rep=" << rep;
      }
    }
  }
}

TEST(LocalPoly, MatchesNormalEquationsOracle) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 8 + static_cast<int>(unif(rng) * 12);
    double h = 0.5 + unif(rng);
    int p = 1 + rep % 3;
    std::vector<double> x(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = h * unif(rng);
      y(i) = noise(rng);
    }
    rdu::LocalFit fit =
        rdu::fit_one_sided(x, y, h, p, Kernel::triangular, Side::plus);

    // Long-double oracle: the normal equations square the condition number,
    // so an all-double oracle would not itself be good to 1e-10.
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    MatL design(n, p + 1);
    VecL w(n), yl(n);
    for (int i = 0; i < n; ++i) {
      double u = x[i] / h;
      w(i) = rdu::eval_kernel(Kernel::triangular, u);
      yl(i) = y(i);
      for (int j = 0; j <= p; ++j) design(i, j) = std::pow<long double>(u, j);
    }
    MatL gram = design.transpose() * w.asDiagonal() * design;
    VecL beta = gram.ldlt().solve(design.transpose() * (w.asDiagonal() * yl));
    for (int j = 0; j <= p; ++j) {
      double b = static_cast<double>(beta(j));
      EXPECT_NEAR(fit.coeffs(j), b, 1e-10 * (1.0 + std::abs(b)));
    }
  }
}

TEST(LocalPoly, ThrowsOnThinWindow) {
  std::vector<double> x = {0.1, 0.2, 5.0, 6.0};
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  EXPECT_THROW(
      rdu::fit_one_sided(x, y, 1.0, 2, Kernel::epanechnikov, Side::plus),
      rdu::InsufficientLocalData);
  EXPECT_THROW(
      rdu::fit_one_sided(x, y, 1.0, 1, Kernel::epanechnikov, Side::minus),
      rdu::InsufficientLocalData);
}

TEST(LocalPoly, ThrowsOnRankDeficientWindow) {
  // Three points but only two distinct abscissae cannot identify a quadratic.
  std::vector<double> x = {0.5, 0.5, 0.7};
  Eigen::VectorXd y(3);
  y << 1, 1, 2;
  EXPECT_THROW(
      rdu::fit_one_sided(x, y, 1.0, 2, Kernel::epanechnikov, Side::plus),
      rdu::InsufficientLocalData);
}

TEST(LocalPoly, CutoffPointOwnedByBothSides) {
  std::vector<double> x = {0.0, -0.3, -0.5, 0.4, 0.6};
  Eigen::VectorXd y(5);
  y << 0, 1, 2, 3, 4;
  rdu::LocalFit minus =
      rdu::fit_one_sided(x, y, 1.0, 1, Kernel::epanechnikov, Side::minus);
  rdu::LocalFit plus =
      rdu::fit_one_sided(x, y, 1.0, 1, Kernel::epanechnikov, Side::plus);
  EXPECT_EQ(minus.n_used, 3);
  EXPECT_EQ(plus.n_used, 3);
}

TEST(LocalPoly, TildeMuReconstruction) {
  // Kinked but continuous curve (the cutoff point sits in both windows, so a
  // jump there would contaminate the minus fit): each side reconstructs its
  // own branch.
  std::vector<double> x;
  for (int i = -20; i <= 20; ++i) x.push_back(i / 20.0);
  Eigen::VectorXd y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y(i) = x[i] >= 0 ? 2.0 + x[i] + 0.5 * x[i] * x[i] : 2.0 - x[i];
  auto plus = rdu::fit_one_sided(x, y, 1.0, 2, Kernel::epanechnikov, Side::plus);
  auto minus =
      rdu::fit_one_sided(x, y, 1.0, 2, Kernel::epanechnikov, Side::minus);
  EXPECT_NEAR(rdu::tilde_mu(plus, minus, 0.35, 2), 2.0 + 0.35 + 0.5 * 0.1225,
              1e-9);
  EXPECT_NEAR(rdu::tilde_mu(plus, minus, -0.4, 2), 2.4, 1e-9);
  EXPECT_NEAR(rdu::tilde_mu(plus, minus, 0.0, 2), 2.0, 1e-9);  // plus owns 0
  EXPECT_THROW(rdu::tilde_mu(plus, minus, 1.5, 2), rdu::OutOfWindow);
  EXPECT_THROW(rdu::tilde_mu(plus, minus, 0.3, 3), std::invalid_argument);
}

TEST(LocalPoly, MultiFitMatchesSingleFits) {
  std::mt19937 rng(11);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(50);
  Eigen::MatrixXd resp(50, 3);
  for (int i = 0; i < 50; ++i) {
    x[i] = std::abs(noise(rng));
    for (int c = 0; c < 3; ++c) resp(i, c) = noise(rng);
  }
  auto multi = rdu::fit_one_sided_multi(x, resp, 1.2, 2,
                                        Kernel::epanechnikov, Side::plus);
  for (int c = 0; c < 3; ++c) {
    auto single = rdu::fit_one_sided(x, resp.col(c), 1.2, 2,
                                     Kernel::epanechnikov, Side::plus);
    EXPECT_TRUE(multi.coeffs.col(c).isApprox(single.coeffs, 1e-13));
    EXPECT_EQ(multi.column(c).n_used, single.n_used);
  }
}

TEST(LocalPoly, PooledFitUsesBothSides) {
  std::vector<double> x = {-0.8, -0.4, 0.3, 0.7};
  Eigen::VectorXd y(4);
  for (int i = 0; i < 4; ++i) y(i) = 1.0 + 2.0 * x[i];
  auto fit = rdu::fit_pooled(x, y, 1.0, 1, Kernel::epanechnikov);
  EXPECT_EQ(fit.n_used, 4);
  EXPECT_NEAR(fit.derivative(0), 1.0, 1e-10);
  EXPECT_NEAR(fit.derivative(1), 2.0, 1e-10);
}

}  // namespace
