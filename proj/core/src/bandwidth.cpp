#include "rduniband/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "rduniband/density.hpp"
#include "rduniband/localpoly.hpp"

namespace rdu {

namespace {

constexpr double kVanishing = 1e-10;

double factorial(int v) {
  double f = 1;
  for (int i = 2; i <= v; ++i) f *= i;
  return f;
}

double abs_range(const std::vector<double>& x) {
  double m = 0;
  for (double xi : x) m = std::max(m, std::abs(xi));
  if (m <= 0) throw DegenerateSample("bandwidth: degenerate running variable");
  return m;
}

// e_v' Gamma^{-1} Lambda_{s,s+1} / (s+1)!  per side.
double bias_weight(Kernel kernel, int s, int v, Side side) {
  Eigen::MatrixXd gamma = gamma_matrix(kernel, s, side);
  Eigen::VectorXd lambda = lambda_vector(kernel, s, s + 1, side);
  Eigen::VectorXd sol = gamma.ldlt().solve(lambda);
  return sol(v) / factorial(s + 1);
}

// [Gamma^{-1} Psi Gamma^{-1}]_{vv} per side.
double variance_weight(Kernel kernel, int s, int v, Side side) {
  Eigen::MatrixXd gamma = gamma_matrix(kernel, s, side);
  Eigen::MatrixXd psi = psi_matrix(kernel, s, side);
  Eigen::VectorXd ev = Eigen::VectorXd::Zero(s + 1);
  ev(v) = 1.0;
  Eigen::VectorXd z = gamma.ldlt().solve(ev);
  return z.dot(psi * z);
}

// Global (unweighted) one-sided polynomial regression in the scaled basis
// x/scale. Returns false when the side cannot support the fit.
bool global_side_derivative(const std::vector<double>& x,
                            const Eigen::VectorXd& g, Side side, int order,
                            double* deriv) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    bool side_ok = side == Side::plus ? x[i] >= 0 : x[i] <= 0;
    if (side_ok) idx.push_back(i);
  }
  auto m = static_cast<Eigen::Index>(idx.size());
  double scale = 0;
  for (std::size_t i : idx) scale = std::max(scale, std::abs(x[i]));
  if (m < order + 3 || scale <= 0) return false;
  Eigen::MatrixXd basis(m, order + 1);
  Eigen::VectorXd y(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    double u = x[idx[static_cast<std::size_t>(r)]] / scale, u_pow = 1;
    for (int j = 0; j <= order; ++j) {
      basis(r, j) = u_pow;
      u_pow *= u;
    }
    y(r) = g(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]));
  }
  Eigen::VectorXd beta = basis.colPivHouseholderQr().solve(y);
  *deriv = beta(order) * factorial(order) / std::pow(scale, order);
  return true;
}

}  // namespace

BandwidthRule bandwidth_rule_from_string(const std::string& name) {
  if (name == "rot") return BandwidthRule::rot;
  if (name == "mse") return BandwidthRule::mse;
  if (name == "fixed" || name.rfind("fixed:", 0) == 0) return BandwidthRule::fixed;
  throw std::invalid_argument("unknown bandwidth rule: " + name);
}

const char* to_string(BandwidthRule r) {
  switch (r) {
    case BandwidthRule::rot: return "rot";
    case BandwidthRule::mse: return "mse";
    case BandwidthRule::fixed: return "fixed";
  }
  return "?";
}

StepOne step1_pilot(const std::vector<double>& x, int s, int v, Kernel kernel) {
  if (s < 1 || v < 0 || v >= s + 1)
    throw std::invalid_argument("step1_pilot: need 0 <= v <= s, s >= 1");
  StepOne out;
  double b_n = silverman_bandwidth(x, -0.2);
  out.f_x0 = kde_at_zero(x, b_n, kernel);
  // Preliminary bias constant with unit pilot curvatures. The one-sided
  // constants have equal magnitude under kernel parity, so their signed
  // difference cancels identically whenever v + s is odd; the magnitude sum
  // below equals |difference| whenever the difference is nonzero and stays
  // informative in the parity case.
  out.c0 = std::abs(bias_weight(kernel, s, v, Side::plus)) +
           std::abs(bias_weight(kernel, s, v, Side::minus));
  out.c0_prime = (variance_weight(kernel, s, v, Side::plus) +
                  variance_weight(kernel, s, v, Side::minus)) /
                 out.f_x0;
  double cap = abs_range(x);
  double n = static_cast<double>(x.size());
  if (std::abs(out.c0) < kVanishing) {
    out.degenerate = true;
    out.h0 = cap;
  } else {
    double ratio = (2.0 * v + 1) / (2.0 * s + 2 - 2 * v) * out.c0_prime /
                   (out.c0 * out.c0);
    out.h0 = std::min(std::pow(ratio, 0.2) * std::pow(n, -0.2), cap);
  }
  return out;
}

Pilots step2_pilots(const std::vector<double>& x, const Eigen::VectorXd& g,
                    double h0, int s, Kernel kernel) {
  Pilots out;
  for (Side side : {Side::plus, Side::minus}) {
    LocalFit fit = fit_one_sided(x, g, h0, s, kernel, side);
    double wsum = 0, rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      bool side_ok = side == Side::plus ? x[i] >= 0 : x[i] <= 0;
      if (!side_ok) continue;
      double w = eval_kernel(kernel, x[i] / h0);
      if (w <= 0) continue;
      double u = x[i] / h0, pred = 0, u_pow = 1;
      for (int j = 0; j <= s; ++j) {
        pred += fit.coeffs(j) * u_pow;
        u_pow *= u;
      }
      double r = g(i) - pred;
      wsum += w;
      rss += w * r * r;
    }
    double sigma2 = rss / wsum;
    // The (s+1)-th derivative comes from a global one-sided polynomial
    // regression of order s+1 (its leading coefficient), falling back to a
    // local order-(s+1) fit at h0 when the side is too small to support it.
    double deriv;
    if (!global_side_derivative(x, g, side, s + 1, &deriv))
      deriv = fit_one_sided(x, g, h0, s + 1, kernel, side).derivative(s + 1);
    if (side == Side::plus) {
      out.sigma2_plus = sigma2;
      out.deriv_plus = deriv;
    } else {
      out.sigma2_minus = sigma2;
      out.deriv_minus = deriv;
    }
  }
  return out;
}

StepThree step3_final(const Pilots& pl, double f_x0, std::size_t n, int s,
                      int v, Kernel kernel, double range_cap) {
  if (f_x0 <= 0) throw DegenerateDensity("step3_final: f_x0 must be positive");
  StepThree out;
  // Magnitude sum of the one-sided biases, as in step 1: equal to the signed
  // difference whenever the sides pull in opposite directions, and immune to
  // the adversarial near-cancellation that otherwise spikes h toward the cap.
  out.c_hat = std::abs(bias_weight(kernel, s, v, Side::plus) * pl.deriv_plus) +
              std::abs(bias_weight(kernel, s, v, Side::minus) * pl.deriv_minus);
  out.c_prime_hat = (pl.sigma2_plus * variance_weight(kernel, s, v, Side::plus) +
                     pl.sigma2_minus * variance_weight(kernel, s, v, Side::minus)) /
                    f_x0;
  double nn = static_cast<double>(n);
  double exponent = -1.0 / (2.0 * s + 3);
  if (std::abs(out.c_hat) < kVanishing || out.c_prime_hat <= 0) {
    out.degenerate = true;
    out.h_mse = range_cap;
  } else {
    double ratio = (2.0 * v + 1) / (2.0 * s + 2 - 2 * v) * out.c_prime_hat /
                   (out.c_hat * out.c_hat);
    out.h_mse = std::min(std::pow(ratio, 1.0 / (2.0 * s + 3)) * std::pow(nn, exponent),
                         range_cap);
  }
  out.h_rot = out.h_mse * std::pow(nn, -static_cast<double>(s) /
                                           ((2.0 * s + 3) * (s + 3.0)));
  return out;
}

namespace {

double sample_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto idx = static_cast<std::size_t>(pos);
  return v[std::min(idx, v.size() - 1)];
}

// Selection response for component k at quantile level q (mean designs
// ignore q).
Eigen::VectorXd selection_response(const ObservationSet& s, Family family,
                                   int k, double q) {
  std::size_t n = s.size();
  Eigen::VectorXd g(n);
  switch (family) {
    case Family::smrd:
    case Family::smrk:
    case Family::fmrd:
    case Family::fmrk:
    case Family::gfmrd:
      if (k == 1)
        for (std::size_t i = 0; i < n; ++i) g(i) = s.y[i];
      else
        for (std::size_t i = 0; i < n; ++i) g(i) = s.d[i];
      return g;
    case Family::scrd:
    case Family::sqrd:
    case Family::sqrk: {
      double yq = sample_quantile(s.y, q);
      for (std::size_t i = 0; i < n; ++i) g(i) = s.y[i] <= yq ? 1.0 : 0.0;
      return g;
    }
    case Family::fqrk: {
      if (k == 2) {
        for (std::size_t i = 0; i < n; ++i) g(i) = s.d[i];
        return g;
      }
      double yq = sample_quantile(s.y, q);
      for (std::size_t i = 0; i < n; ++i) g(i) = s.y[i] <= yq ? 1.0 : 0.0;
      return g;
    }
    case Family::fqrd: {
      if (k == 2) {
        for (std::size_t i = 0; i < n; ++i) g(i) = s.d[i] == 1.0 ? 1.0 : 0.0;
        return g;
      }
      double yq = sample_quantile(s.y, q);
      for (std::size_t i = 0; i < n; ++i)
        g(i) = (s.d[i] == 1.0 && s.y[i] <= yq) ? 1.0 : 0.0;
      return g;
    }
  }
  throw std::logic_error("selection_response: unreachable");
}

Eigen::VectorXd group_response(const ObservationSet& s, int k, int label) {
  Eigen::VectorXd g(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double base = k == 1 ? s.y[i] : s.d[i];
    g(i) = s.g[i] == label ? base : 0.0;
  }
  return g;
}

}  // namespace

SelectedBandwidths select_bandwidths(const ObservationSet& s,
                                     const DesignSpec& spec,
                                     const BandwidthConfig& cfg) {
  validate_design(spec, s);
  SelectedBandwidths out;

  if (cfg.rule == BandwidthRule::fixed) {
    if (cfg.fixed_h1 <= 0)
      throw std::invalid_argument("select_bandwidths: fixed rule needs h1 > 0");
    out.bw.h1 = cfg.fixed_h1;
    out.bw.h2 = cfg.fixed_h2 > 0 ? cfg.fixed_h2 : cfg.fixed_h1;
    for (int k = 1; k <= family_components(spec.family); ++k) {
      BandwidthPlan plan;
      plan.k = k;
      plan.h_used = k == 1 ? out.bw.h1 : out.bw.h2;
      out.plans.push_back(plan);
    }
    return out;
  }

  int v = spec.v();
  int s_order = spec.order() - 1;  // target bias order
  double cap = abs_range(s.x);
  StepOne st1 = step1_pilot(s.x, s_order, v, spec.kernel);

  auto run_steps = [&](const Eigen::VectorXd& g, int k, double point) {
    BandwidthPlan plan;
    plan.k = k;
    plan.point = point;
    plan.step1 = st1;
    plan.pilots = step2_pilots(s.x, g, st1.h0, s_order, spec.kernel);
    plan.step3 = step3_final(plan.pilots, st1.f_x0, s.size(), s_order, v,
                             spec.kernel, cap);
    plan.h_used = cfg.rule == BandwidthRule::rot ? plan.step3.h_rot
                                                 : plan.step3.h_mse;
    return plan;
  };

  int n_comp = family_components(spec.family);
  for (int k = 1; k <= n_comp; ++k) {
    BandwidthPlan plan = run_steps(selection_response(s, spec.family, k, 0.5), k, -1);
    out.plans.push_back(plan);
    if (k == 1)
      out.bw.h1 = plan.h_used;
    else
      out.bw.h2 = plan.h_used;
  }

  if (!cfg.per_theta) return out;

  // Per-point refinements where the design evaluates on a grid.
  if (family_is_quantile(spec.family)) {
    std::vector<double> thetas(spec.n_theta);
    if (spec.n_theta == 1) {
      thetas[0] = 0.5;
    } else {
      for (int j = 0; j < spec.n_theta; ++j)
        thetas[j] = spec.grid_trim +
                    (1 - 2 * spec.grid_trim) * j / (spec.n_theta - 1);
    }
    for (int j = 0; j < spec.n_theta; ++j) {
      BandwidthPlan plan =
          run_steps(selection_response(s, spec.family, 1, thetas[j]), 1, thetas[j]);
      out.bw.h1_per_point.push_back(plan.h_used);
      out.plans.push_back(plan);
    }
  } else if (spec.family == Family::scrd) {
    double mn = 0, mx = 0;
    bool any = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (std::abs(s.x[i]) > out.bw.h1) continue;
      if (!any) {
        mn = mx = s.y[i];
        any = true;
      } else {
        mn = std::min(mn, s.y[i]);
        mx = std::max(mx, s.y[i]);
      }
    }
    if (!any) throw InsufficientLocalData("select_bandwidths: empty window");
    for (int j = 0; j < spec.n_y; ++j) {
      double yj = mn + (mx - mn) * j / (spec.n_y - 1);
      Eigen::VectorXd g(s.size());
      for (std::size_t i = 0; i < s.size(); ++i)
        g(i) = s.y[i] <= yj ? 1.0 : 0.0;
      BandwidthPlan plan = run_steps(g, 1, yj);
      out.bw.h1_per_point.push_back(plan.h_used);
      out.plans.push_back(plan);
    }
  } else if (spec.family == Family::gfmrd) {
    std::set<int> labels(s.g.begin(), s.g.end());
    for (int label : labels) {
      BandwidthPlan p1 = run_steps(group_response(s, 1, label), 1, label);
      BandwidthPlan p2 = run_steps(group_response(s, 2, label), 2, label);
      out.bw.h1_per_point.push_back(p1.h_used);
      out.bw.h2_per_point.push_back(p2.h_used);
      out.plans.push_back(p1);
      out.plans.push_back(p2);
    }
  }
  return out;
}

}  // namespace rdu
