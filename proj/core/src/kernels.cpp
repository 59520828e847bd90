#include "rduniband/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rdu {

namespace {

// Coefficients of K(u) as a polynomial in u on [0, 1]; by symmetry the minus
// side is K(-u).
std::vector<double> half_line_poly(Kernel k) {
  switch (k) {
    case Kernel::uniform:
      return {0.5};
    case Kernel::triangular:
      return {1.0, -1.0};
    case Kernel::epanechnikov:
      return {0.75, 0.0, -0.75};
    case Kernel::biweight:
      return {15.0 / 16, 0.0, -30.0 / 16, 0.0, 15.0 / 16};
    case Kernel::triweight:
      return {35.0 / 32, 0.0, -105.0 / 32, 0.0, 105.0 / 32, 0.0, -35.0 / 32};
  }
  throw std::invalid_argument("unknown kernel");
}

std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

double sign_for(Side side, int parity) {
  return (side == Side::minus && (parity % 2 != 0)) ? -1.0 : 1.0;
}

}  // namespace

Kernel kernel_from_string(const std::string& name) {
  if (name == "uniform") return Kernel::uniform;
  if (name == "triangular") return Kernel::triangular;
  if (name == "epanechnikov") return Kernel::epanechnikov;
  if (name == "biweight") return Kernel::biweight;
  if (name == "triweight") return Kernel::triweight;
  throw std::invalid_argument("unknown kernel: " + name);
}

const char* to_string(Kernel k) {
  switch (k) {
    case Kernel::uniform: return "uniform";
    case Kernel::triangular: return "triangular";
    case Kernel::epanechnikov: return "epanechnikov";
    case Kernel::biweight: return "biweight";
    case Kernel::triweight: return "triweight";
  }
  return "?";
}

double eval_kernel(Kernel k, double u) {
  double a = std::abs(u);
  if (a > 1.0) return 0.0;
  switch (k) {
    case Kernel::uniform: return 0.5;
    case Kernel::triangular: return 1.0 - a;
    case Kernel::epanechnikov: return 0.75 * (1.0 - u * u);
    case Kernel::biweight: {
      double t = 1.0 - u * u;
      return 15.0 / 16 * t * t;
    }
    case Kernel::triweight: {
      double t = 1.0 - u * u;
      return 35.0 / 32 * t * t * t;
    }
  }
  return 0.0;
}

double kernel_moment(Kernel k, int j, Side side) {
  auto poly = half_line_poly(k);
  double acc = 0;
  for (std::size_t a = 0; a < poly.size(); ++a)
    acc += poly[a] / (j + static_cast<double>(a) + 1);
  return sign_for(side, j) * acc;
}

double kernel_sq_moment(Kernel k, int j, Side side) {
  auto sq = poly_mul(half_line_poly(k), half_line_poly(k));
  double acc = 0;
  for (std::size_t a = 0; a < sq.size(); ++a)
    acc += sq[a] / (j + static_cast<double>(a) + 1);
  return sign_for(side, j) * acc;
}

Eigen::MatrixXd gamma_matrix(Kernel k, int p, Side side) {
  Eigen::MatrixXd g(p + 1, p + 1);
  for (int i = 0; i <= p; ++i)
    for (int j = i; j <= p; ++j) g(i, j) = g(j, i) = kernel_moment(k, i + j, side);
  return g;
}

Eigen::VectorXd lambda_vector(Kernel k, int p, int q, Side side) {
  Eigen::VectorXd l(p + 1);
  for (int j = 0; j <= p; ++j) l(j) = kernel_moment(k, q + j, side);
  return l;
}

Eigen::MatrixXd psi_matrix(Kernel k, int p, Side side, double c_k, double c_l) {
  if (c_k <= 0 || c_l <= 0) throw std::invalid_argument("psi_matrix: c <= 0");
  // K(u/c) = sum_a coef_a (u/c)^a; the product is a polynomial in u over the
  // overlap [0, min(c_k, c_l)] on the plus side.
  auto base = half_line_poly(k);
  std::vector<double> pk(base.size()), pl(base.size());
  for (std::size_t a = 0; a < base.size(); ++a) {
    pk[a] = base[a] / std::pow(c_k, static_cast<double>(a));
    pl[a] = base[a] / std::pow(c_l, static_cast<double>(a));
  }
  auto prod = poly_mul(pk, pl);
  double upper = std::min(c_k, c_l);
  // Not symmetric when c_k != c_l: (j,m) scales by c_k^-j c_l^-m.
  Eigen::MatrixXd psi(p + 1, p + 1);
  for (int j = 0; j <= p; ++j) {
    for (int m = 0; m <= p; ++m) {
      double acc = 0;
      for (std::size_t a = 0; a < prod.size(); ++a) {
        double deg = j + m + static_cast<double>(a);
        acc += prod[a] * std::pow(upper, deg + 1) / (deg + 1);
      }
      acc /= std::pow(c_k, j) * std::pow(c_l, m);
      psi(j, m) = sign_for(side, j + m) * acc;
    }
  }
  return psi;
}

}  // namespace rdu
