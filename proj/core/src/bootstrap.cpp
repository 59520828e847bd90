#include "rduniband/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rduniband/rng.hpp"
#include "rduniband/threads.hpp"

namespace rdu {

namespace {

double factorial(int v) {
  double f = 1;
  for (int i = 2; i <= v; ++i) f *= i;
  return f;
}

}  // namespace

Eigen::VectorXd emp_weights(const std::vector<double>& x, double h, int p,
                            int v, Kernel kernel, Side side, double f_x0) {
  if (h <= 0) throw std::invalid_argument("emp_weights: h must be positive");
  if (v < 0 || v > p) throw std::invalid_argument("emp_weights: v out of range");
  if (f_x0 <= 0) throw DegenerateDensity("emp_weights: f_x0 must be positive");
  std::size_t n = x.size();
  Eigen::MatrixXd gamma = gamma_matrix(kernel, p, side);
  Eigen::VectorXd ev = Eigen::VectorXd::Zero(p + 1);
  ev(v) = 1.0;
  Eigen::VectorXd z = gamma.ldlt().solve(ev);  // z = Gamma^{-1} e_v
  double scale = factorial(v) / (std::sqrt(static_cast<double>(n) * h) * f_x0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool side_ok = side == Side::plus ? x[i] >= 0 : x[i] <= 0;
    if (!side_ok) continue;
    double u = x[i] / h;
    if (std::abs(u) > 1.0) continue;
    double k = eval_kernel(kernel, u);
    if (k <= 0) continue;
    double dot = 0, u_pow = 1;
    for (int j = 0; j <= p; ++j) {
      dot += z(j) * u_pow;
      u_pow *= u;
    }
    w(i) = scale * dot * k;
  }
  return w;
}

double emp_component(const Eigen::VectorXd& xi, const Eigen::VectorXd& weights,
                     const Eigen::VectorXd& resid) {
  return xi.dot(weights.cwiseProduct(resid));
}

double assemble_process(const Eigen::VectorXd& coef,
                        const Eigen::VectorXd& component_draws) {
  return coef.dot(component_draws);
}

Eigen::VectorXd draw_multipliers(std::size_t n, std::uint64_t master_seed,
                                 std::uint64_t b) {
  Stream stream(derive_seed(master_seed, b));
  Eigen::VectorXd xi(n);
  for (std::size_t i = 0; i < n; ++i) xi(i) = stream.normal();
  return xi;
}

Eigen::MatrixXd run_bootstrap(const Eigen::MatrixXd& scores, int B,
                              std::uint64_t master_seed, int n_threads) {
  if (B < 1) throw std::invalid_argument("run_bootstrap: B must be positive");
  std::size_t n = static_cast<std::size_t>(scores.rows());
  Eigen::MatrixXd draws(B, scores.cols());
  parallel_for(static_cast<std::size_t>(B), thread_budget(n_threads),
               [&](std::size_t b) {
                 Eigen::VectorXd xi = draw_multipliers(n, master_seed, b);
                 draws.row(b) = (scores.transpose() * xi).transpose();
               });
  return draws;
}

double draw_quantile(std::vector<double> draws, double q) {
  if (draws.empty()) throw std::invalid_argument("draw_quantile: empty draws");
  std::sort(draws.begin(), draws.end());
  double B = static_cast<double>(draws.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * B));
  if (rank < 1) rank = 1;
  if (rank > draws.size()) rank = draws.size();
  return draws[rank - 1];
}

namespace {

TestResult sup_test(const std::vector<double>& tau, const Eigen::MatrixXd& draws,
                    double level, double stat_scale, bool absolute, bool center,
                    bool positive_part) {
  if (static_cast<int>(tau.size()) != draws.cols())
    throw std::invalid_argument("sup_test: grid size mismatch");
  int ne = static_cast<int>(tau.size());
  int B = static_cast<int>(draws.rows());

  double tau_center = 0;
  if (center) {
    for (double t : tau) tau_center += t;
    tau_center /= ne;
  }
  double stat = 0;
  for (int j = 0; j < ne; ++j) {
    double t = tau[j] - tau_center;
    double contrib = absolute ? std::abs(t) : (positive_part ? std::max(t, 0.0) : t);
    stat = std::max(stat, contrib);
  }
  stat *= stat_scale;

  std::vector<double> sup_draws(B);
  for (int b = 0; b < B; ++b) {
    double row_center = center ? draws.row(b).mean() : 0.0;
    double m = 0;
    for (int j = 0; j < ne; ++j) {
      double g = draws(b, j) - row_center;
      double contrib = absolute ? std::abs(g) : (positive_part ? std::max(g, 0.0) : g);
      m = std::max(m, contrib);
    }
    sup_draws[b] = m;
  }

  TestResult out;
  out.B = B;
  out.stat = stat;
  int exceed = 0;
  for (double g : sup_draws)
    if (g >= stat) ++exceed;
  out.p_value = static_cast<double>(exceed) / B;
  out.critical = draw_quantile(sup_draws, 1.0 - level);
  out.reject = stat > out.critical;
  return out;
}

}  // namespace

TestResult test_uniform_nullity(const std::vector<double>& tau,
                                const Eigen::MatrixXd& draws, double level,
                                double stat_scale) {
  return sup_test(tau, draws, level, stat_scale, true, false, false);
}

TestResult test_homogeneity(const std::vector<double>& tau,
                            const Eigen::MatrixXd& draws, double level,
                            double stat_scale) {
  return sup_test(tau, draws, level, stat_scale, true, true, false);
}

TestResult test_dominance(const std::vector<double>& tau,
                          const Eigen::MatrixXd& draws, double level,
                          double stat_scale) {
  return sup_test(tau, draws, level, stat_scale, false, false, true);
}

BandResult uniform_band(const std::vector<double>& tau,
                        const Eigen::MatrixXd& draws, double alpha,
                        double stat_scale) {
  if (static_cast<int>(tau.size()) != draws.cols())
    throw std::invalid_argument("uniform_band: grid size mismatch");
  int B = static_cast<int>(draws.rows());
  std::vector<double> sup_abs(B);
  for (int b = 0; b < B; ++b) sup_abs[b] = draws.row(b).cwiseAbs().maxCoeff();
  BandResult out;
  out.critical = draw_quantile(sup_abs, 1.0 - alpha);
  out.half_width = out.critical / stat_scale;
  out.lo.resize(tau.size());
  out.hi.resize(tau.size());
  for (std::size_t j = 0; j < tau.size(); ++j) {
    out.lo[j] = tau[j] - out.half_width;
    out.hi[j] = tau[j] + out.half_width;
  }
  return out;
}

}  // namespace rdu
