#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rduniband/kernels.hpp"
#include "rduniband/types.hpp"

namespace rdu {

// One-sided local polynomial WLS at the cutoff in the scaled basis
// r_p(x/h) = (1, x/h, ..., (x/h)^p) with weights K(x/h) restricted to the
// side (x == 0 carries weight on BOTH sides). coeffs[v] = mu^(v) h^v / v!.
struct LocalFit {
  Side side = Side::plus;
  int p = 1;
  double h = 0;
  int n_used = 0;
  Eigen::VectorXd coeffs;

  double derivative(int v) const;  // mu^(v)(0, side)
};

// Same fit solved once for a matrix of responses (column per response).
struct MultiLocalFit {
  Side side = Side::plus;
  int p = 1;
  double h = 0;
  int n_used = 0;
  Eigen::MatrixXd coeffs;  // (p+1) x n_responses

  double derivative(int v, int col) const;
  LocalFit column(int col) const;
};

// Throws InsufficientLocalData when fewer than p+1 observations carry
// positive weight or the weighted design is rank deficient.
LocalFit fit_one_sided(const std::vector<double>& x, const Eigen::VectorXd& resp,
                       double h, int p, Kernel kernel, Side side);
MultiLocalFit fit_one_sided_multi(const std::vector<double>& x,
                                  const Eigen::MatrixXd& resp, double h, int p,
                                  Kernel kernel, Side side);

// Unrestricted (pooled) fit over the full window |x/h| <= 1.
LocalFit fit_pooled(const std::vector<double>& x, const Eigen::VectorXd& resp,
                    double h, int p, Kernel kernel);
MultiLocalFit fit_pooled_multi(const std::vector<double>& x,
                               const Eigen::MatrixXd& resp, double h, int p,
                               Kernel kernel);

// Order-t Taylor reconstruction at x from the pair of one-sided fits; the
// plus fit owns x >= 0. Throws OutOfWindow when |x| exceeds the owning fit's
// bandwidth, std::invalid_argument when t exceeds the fitted order.
double tilde_mu(const LocalFit& fit_plus, const LocalFit& fit_minus, double x,
                int t);

}  // namespace rdu
