#include "rduniband/localpoly.hpp"

#include <cmath>
#include <stdexcept>

namespace rdu {

namespace {

double factorial(int v) {
  double f = 1;
  for (int i = 2; i <= v; ++i) f *= i;
  return f;
}

bool on_side(double x, Side side) {
  return side == Side::plus ? x >= 0.0 : x <= 0.0;
}

struct WindowIndex {
  std::vector<int> idx;
  std::vector<double> w;
};

WindowIndex window(const std::vector<double>& x, double h, Kernel kernel,
                   Side side, bool pooled) {
  WindowIndex out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!pooled && !on_side(x[i], side)) continue;
    double w = eval_kernel(kernel, x[i] / h);
    if (w > 0) {
      out.idx.push_back(static_cast<int>(i));
      out.w.push_back(w);
    }
  }
  return out;
}

MultiLocalFit solve(const std::vector<double>& x, const Eigen::MatrixXd& resp,
                    double h, int p, Kernel kernel, Side side, bool pooled) {
  if (h <= 0) throw std::invalid_argument("fit: bandwidth must be positive");
  if (p < 0) throw std::invalid_argument("fit: negative order");
  auto win = window(x, h, kernel, side, pooled);
  int m = static_cast<int>(win.idx.size());
  if (m < p + 1)
    throw InsufficientLocalData("local fit: " + std::to_string(m) +
                                " observations in window, need " +
                                std::to_string(p + 1));
  Eigen::MatrixXd a(m, p + 1);
  Eigen::MatrixXd b(m, resp.cols());
  for (int r = 0; r < m; ++r) {
    double sw = std::sqrt(win.w[r]);
    double u = x[win.idx[r]] / h;
    double basis = sw;
    for (int j = 0; j <= p; ++j) {
      a(r, j) = basis;
      basis *= u;
    }
    b.row(r) = sw * resp.row(win.idx[r]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < p + 1)
    throw InsufficientLocalData("local fit: rank-deficient design");
  MultiLocalFit fit;
  fit.side = side;
  fit.p = p;
  fit.h = h;
  fit.n_used = m;
  fit.coeffs = qr.solve(b);
  return fit;
}

}  // namespace

double LocalFit::derivative(int v) const {
  if (v < 0 || v > p) throw std::invalid_argument("derivative: order out of range");
  return coeffs(v) * factorial(v) / std::pow(h, v);
}

double MultiLocalFit::derivative(int v, int col) const {
  if (v < 0 || v > p) throw std::invalid_argument("derivative: order out of range");
  return coeffs(v, col) * factorial(v) / std::pow(h, v);
}

LocalFit MultiLocalFit::column(int col) const {
  LocalFit f;
  f.side = side;
  f.p = p;
  f.h = h;
  f.n_used = n_used;
  f.coeffs = coeffs.col(col);
  return f;
}

LocalFit fit_one_sided(const std::vector<double>& x, const Eigen::VectorXd& resp,
                       double h, int p, Kernel kernel, Side side) {
  return solve(x, resp, h, p, kernel, side, false).column(0);
}

MultiLocalFit fit_one_sided_multi(const std::vector<double>& x,
                                  const Eigen::MatrixXd& resp, double h, int p,
                                  Kernel kernel, Side side) {
  return solve(x, resp, h, p, kernel, side, false);
}

LocalFit fit_pooled(const std::vector<double>& x, const Eigen::VectorXd& resp,
                    double h, int p, Kernel kernel) {
  return solve(x, resp, h, p, kernel, Side::plus, true).column(0);
}

MultiLocalFit fit_pooled_multi(const std::vector<double>& x,
                               const Eigen::MatrixXd& resp, double h, int p,
                               Kernel kernel) {
  return solve(x, resp, h, p, kernel, Side::plus, true);
}

double tilde_mu(const LocalFit& fit_plus, const LocalFit& fit_minus, double x,
                int t) {
  const LocalFit& f = x >= 0 ? fit_plus : fit_minus;
  if (t < 0 || t > f.p) throw std::invalid_argument("tilde_mu: t out of range");
  if (std::abs(x) > f.h) throw OutOfWindow("tilde_mu: |x| > h");
  double u = x / f.h;
  double acc = 0;
  double u_pow = 1;
  for (int v = 0; v <= t; ++v) {
    acc += f.coeffs(v) * u_pow;
    u_pow *= u;
  }
  return acc;
}

}  // namespace rdu
