#include "rduniband/density.hpp"

#include <cmath>
#include <stdexcept>

namespace rdu {

namespace {

bool on_density_side(double x, DensitySide side) {
  switch (side) {
    case DensitySide::plus: return x >= 0;
    case DensitySide::minus: return x <= 0;
    case DensitySide::pooled: return true;
  }
  return true;
}

}  // namespace

double kde_at_zero(const std::vector<double>& x, double b, Kernel kernel) {
  if (b <= 0) throw std::invalid_argument("kde_at_zero: bandwidth must be positive");
  if (x.empty()) throw DegenerateSample("kde_at_zero: empty sample");
  double acc = 0;
  for (double xi : x) acc += eval_kernel(kernel, xi / b);
  if (acc <= 0) throw DegenerateDensity("kde_at_zero: no mass in window");
  return acc / (static_cast<double>(x.size()) * b);
}

double silverman_bandwidth(const std::vector<double>& x, double exponent) {
  std::size_t n = x.size();
  if (n < 2) throw DegenerateSample("silverman_bandwidth: need at least 2 points");
  double mean = 0;
  for (double xi : x) mean += xi;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double xi : x) ss += (xi - mean) * (xi - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd <= 0) throw DegenerateSample("silverman_bandwidth: zero variance");
  return 1.06 * sd * std::pow(static_cast<double>(n), exponent);
}

double cond_density_at_cutoff(const ObservationSet& s, double y,
                              DensitySide side, double a, Kernel kernel) {
  if (a <= 0) throw std::invalid_argument("cond_density_at_cutoff: a must be positive");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!on_density_side(s.x[i], side)) continue;
    double kx = eval_kernel(kernel, s.x[i] / a);
    if (kx <= 0) continue;
    den += kx;
    num += kx * eval_kernel(kernel, (s.y[i] - y) / a);
  }
  if (den <= 0) throw DegenerateDensity("cond_density_at_cutoff: empty window");
  return num / (den * a);
}

double cell_density_times_prob(const ObservationSet& s, double y, int d,
                               Side side, double a, double c, Kernel kernel) {
  if (!s.has_d()) throw std::invalid_argument("cell_density_times_prob: no treatment column");
  if (a <= 0 || c <= 0) throw std::invalid_argument("cell_density_times_prob: bandwidths must be positive");
  double dens_num = 0, dens_den = 0;   // bandwidth a, arm-restricted
  double prob_num = 0, prob_den = 0;   // bandwidth c, Nadaraya-Watson
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool side_ok = side == Side::plus ? s.x[i] >= 0 : s.x[i] <= 0;
    if (!side_ok) continue;
    bool in_arm = (s.d[i] >= 0.5) == (d == 1);
    double kxa = eval_kernel(kernel, s.x[i] / a);
    if (kxa > 0 && in_arm) {
      dens_den += kxa;
      dens_num += kxa * eval_kernel(kernel, (s.y[i] - y) / a);
    }
    double kxc = eval_kernel(kernel, s.x[i] / c);
    if (kxc > 0) {
      prob_den += kxc;
      if (in_arm) prob_num += kxc;
    }
  }
  if (prob_den <= 0) throw DegenerateCell("cell_density_times_prob: empty cutoff window");
  if (dens_den <= 0) return 0.0;  // no kernel mass in the arm: 0/0 cell -> 0
  return (dens_num / (dens_den * a)) * (prob_num / prob_den);
}

double complier_density(const ObservationSet& s, double y, int d, double jump_d,
                        double a, double c, Kernel kernel, double eps) {
  if (std::abs(jump_d) <= eps)
    throw WeakFirstStage("complier_density: first-stage jump below threshold");
  double plus = cell_density_times_prob(s, y, d, Side::plus, a, c, kernel);
  double minus = cell_density_times_prob(s, y, d, Side::minus, a, c, kernel);
  double divisor = d == 1 ? jump_d : -jump_d;
  return (plus - minus) / divisor;
}

}  // namespace rdu
