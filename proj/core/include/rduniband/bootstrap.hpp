#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rduniband/kernels.hpp"
#include "rduniband/types.hpp"

namespace rdu {

// Per-observation multiplier weights of one EMP component:
//   w_i = v! * (e_v' Gamma_side^{-1} r_p(x_i/h)) * K(x_i/h) * 1{side}
//         / (sqrt(n h) * f_x0),
// zero outside |x_i/h| <= 1; x_i == 0 carries weight on both sides. The
// weighted sum sum_i xi_i w_i e_i(theta) mimics
// sqrt(n h^{1+2v}) (muhat^(v) - mu^(v)) on its side.
Eigen::VectorXd emp_weights(const std::vector<double>& x, double h, int p,
                            int v, Kernel kernel, Side side, double f_x0);

// One EMP value: sum_i xi_i * w_i * e_i.
double emp_component(const Eigen::VectorXd& xi, const Eigen::VectorXd& weights,
                     const Eigen::VectorXd& resid);

// Linear assembly of component draws into the process draw:
// sum_t coef(t) * component(t).
double assemble_process(const Eigen::VectorXd& coef,
                        const Eigen::VectorXd& component_draws);

// Multipliers xi_b: n i.i.d. N(0,1) from lineage (master_seed, b). The same
// xi_b vector is shared by every component/eval point within iteration b.
Eigen::VectorXd draw_multipliers(std::size_t n, std::uint64_t master_seed,
                                 std::uint64_t b);

// B x |eval| matrix of process draws: row b = scores' * xi_b. Bit-identical
// for any thread count (each row depends only on its own lineage index).
Eigen::MatrixXd run_bootstrap(const Eigen::MatrixXd& scores, int B,
                              std::uint64_t master_seed, int n_threads = 0);

// Quantile convention: draw ceil(q * B) (1-based) of the ascending sort.
double draw_quantile(std::vector<double> draws, double q);

struct TestResult {
  double stat = 0;      // sup statistic, baseline scale
  double critical = 0;  // (1 - level)-quantile of the draws
  double p_value = 0;   // empirical exceedance fraction, multiples of 1/B
  bool reject = false;  // stat > critical
  int B = 0;
};

// H0: tau == 0 uniformly. stat = scale * max_j |tau_j|; draw = max_j |G'_b(j)|.
TestResult test_uniform_nullity(const std::vector<double>& tau,
                                const Eigen::MatrixXd& draws, double level,
                                double stat_scale);

// H0: tau constant across the grid. Statistic and draws are centered by the
// unweighted grid mean before taking sups.
TestResult test_homogeneity(const std::vector<double>& tau,
                            const Eigen::MatrixXd& draws, double level,
                            double stat_scale);

// H0: tau <= 0 everywhere. stat = scale * max_j max(tau_j, 0);
// draw = max_j max(G'_b(j), 0).
TestResult test_dominance(const std::vector<double>& tau,
                          const Eigen::MatrixXd& draws, double level,
                          double stat_scale);

struct BandResult {
  std::vector<double> lo, hi;
  double critical = 0;    // sup-|draw| quantile on the baseline scale
  double half_width = 0;  // critical / stat_scale
};

// Uniform (1 - alpha) confidence band: tau_j -+ critical / stat_scale.
BandResult uniform_band(const std::vector<double>& tau,
                        const Eigen::MatrixXd& draws, double alpha,
                        double stat_scale);

}  // namespace rdu
