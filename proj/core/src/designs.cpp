#include "rduniband/designs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "rduniband/bootstrap.hpp"
#include "rduniband/density.hpp"

namespace rdu {

Family family_from_string(const std::string& name) {
  if (name == "smrd") return Family::smrd;
  if (name == "fmrd") return Family::fmrd;
  if (name == "smrk") return Family::smrk;
  if (name == "fmrk") return Family::fmrk;
  if (name == "scrd") return Family::scrd;
  if (name == "sqrd") return Family::sqrd;
  if (name == "fqrd") return Family::fqrd;
  if (name == "sqrk") return Family::sqrk;
  if (name == "fqrk") return Family::fqrk;
  if (name == "gfmrd") return Family::gfmrd;
  throw std::invalid_argument("unknown design family: " + name);
}

const char* to_string(Family f) {
  switch (f) {
    case Family::smrd: return "smrd";
    case Family::fmrd: return "fmrd";
    case Family::smrk: return "smrk";
    case Family::fmrk: return "fmrk";
    case Family::scrd: return "scrd";
    case Family::sqrd: return "sqrd";
    case Family::fqrd: return "fqrd";
    case Family::sqrk: return "sqrk";
    case Family::fqrk: return "fqrk";
    case Family::gfmrd: return "gfmrd";
  }
  return "?";
}

int family_order(Family f) {
  switch (f) {
    case Family::smrk:
    case Family::fmrk:
    case Family::sqrk:
    case Family::fqrk:
      return 1;
    default:
      return 0;
  }
}

bool family_needs_d(Family f) {
  switch (f) {
    case Family::fmrd:
    case Family::fmrk:
    case Family::fqrd:
    case Family::fqrk:
    case Family::gfmrd:
      return true;
    default:
      return false;
  }
}

bool family_needs_g(Family f) { return f == Family::gfmrd; }

bool family_needs_slope_jump(Family f) {
  return f == Family::smrk || f == Family::sqrk;
}

bool family_is_quantile(Family f) {
  switch (f) {
    case Family::sqrd:
    case Family::fqrd:
    case Family::sqrk:
    case Family::fqrk:
      return true;
    default:
      return false;
  }
}

int family_components(Family f) { return family_needs_d(f) ? 2 : 1; }

void validate_design(const DesignSpec& spec, const ObservationSet& s) {
  if (s.size() == 0) throw DegenerateSample("validate_design: empty sample");
  if (s.y.size() != s.size()) throw std::invalid_argument("validate_design: x/y length mismatch");
  if (spec.order() <= spec.v())
    throw std::invalid_argument("validate_design: order p must exceed v");
  if (spec.n_theta < 1 || spec.n_y < 2)
    throw std::invalid_argument("validate_design: grid sizes");
  if (!(spec.grid_trim >= 0 && spec.grid_trim < 0.5))
    throw std::invalid_argument("validate_design: grid_trim outside [0, 0.5)");
  if (spec.eps_denominator <= 0 || spec.density_floor <= 0)
    throw std::invalid_argument("validate_design: thresholds must be positive");
  if (family_needs_d(spec.family) && !s.has_d())
    throw std::invalid_argument("validate_design: design requires treatment column d");
  if (s.has_d() && s.d.size() != s.size())
    throw std::invalid_argument("validate_design: d length mismatch");
  if (family_needs_g(spec.family) && !s.has_g())
    throw std::invalid_argument("validate_design: design requires group column g");
  if (s.has_g() && s.g.size() != s.size())
    throw std::invalid_argument("validate_design: g length mismatch");
  if (family_needs_slope_jump(spec.family)) {
    if (!spec.known_slope_jump)
      throw MissingSlopeJump("validate_design: design requires known_slope_jump");
    if (std::abs(*spec.known_slope_jump) <= spec.eps_denominator)
      throw MissingSlopeJump("validate_design: known_slope_jump too close to zero");
  }
  if (spec.family == Family::fqrd)
    for (double di : s.d)
      if (di != 0.0 && di != 1.0)
        throw std::invalid_argument("validate_design: fqrd requires binary d in {0,1}");
}

namespace {

double factorial(int v) {
  double f = 1;
  for (int i = 2; i <= v; ++i) f *= i;
  return f;
}

// Reusable one-sided (or pooled) WLS factorization: the QR of the
// sqrt(K)-scaled scaled-basis design, shared across response matrices.
class SidedSolver {
 public:
  SidedSolver(const std::vector<double>& x, double h, int p, Kernel kernel,
              Side side, bool pooled = false)
      : h_(h), p_(p) {
    if (h <= 0) throw std::invalid_argument("SidedSolver: h must be positive");
    for (std::size_t i = 0; i < x.size(); ++i) {
      bool side_ok = pooled || (side == Side::plus ? x[i] >= 0 : x[i] <= 0);
      if (!side_ok) continue;
      double w = eval_kernel(kernel, x[i] / h);
      if (w > 0) {
        idx_.push_back(static_cast<int>(i));
        sqrtw_.push_back(std::sqrt(w));
      }
    }
    int m = static_cast<int>(idx_.size());
    if (m < p + 1)
      throw InsufficientLocalData("local fit: " + std::to_string(m) +
                                  " observations in window, need " +
                                  std::to_string(p + 1));
    Eigen::MatrixXd a(m, p + 1);
    for (int r = 0; r < m; ++r) {
      double u = x[idx_[r]] / h;
      double basis = sqrtw_[r];
      for (int j = 0; j <= p; ++j) {
        a(r, j) = basis;
        basis *= u;
      }
    }
    qr_.compute(a);
    if (qr_.rank() < p + 1)
      throw InsufficientLocalData("local fit: rank-deficient design");
  }

  // (p+1) x m coefficient matrix in the scaled basis.
  Eigen::MatrixXd coeffs(const Eigen::MatrixXd& resp) const {
    Eigen::MatrixXd b(idx_.size(), resp.cols());
    for (std::size_t r = 0; r < idx_.size(); ++r)
      b.row(r) = sqrtw_[r] * resp.row(idx_[r]);
    return qr_.solve(b);
  }

  double derivative(const Eigen::MatrixXd& c, int v, int col) const {
    return c(v, col) * factorial(v) / std::pow(h_, v);
  }

 private:
  double h_;
  int p_;
  std::vector<int> idx_;
  std::vector<double> sqrtw_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

// Order-p reconstruction r_p(x/h)' alpha_side at every |x_i| <= h (plus fit
// owns x == 0); zero rows outside the window.
Eigen::MatrixXd tilde_predictions(const std::vector<double>& x, double h, int p,
                                  const Eigen::MatrixXd& cplus,
                                  const Eigen::MatrixXd& cminus) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(x.size(), cplus.cols());
  Eigen::RowVectorXd basis(p + 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > h) continue;
    double u = x[i] / h;
    double b = 1;
    for (int j = 0; j <= p; ++j) {
      basis(j) = b;
      b *= u;
    }
    t.row(i) = basis * (x[i] >= 0 ? cplus : cminus);
  }
  return t;
}

// Residual matrix R - mu_tilde, zeroed outside the window.
Eigen::MatrixXd residuals(const std::vector<double>& x, double h, int p,
                          const Eigen::MatrixXd& resp,
                          const Eigen::MatrixXd& cplus,
                          const Eigen::MatrixXd& cminus) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(resp.rows(), resp.cols());
  Eigen::MatrixXd t = tilde_predictions(x, h, p, cplus, cminus);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) <= h) e.row(i) = resp.row(i) - t.row(i);
  return e;
}

struct Ctx {
  const ObservationSet& s;
  const DesignSpec& spec;
  double a_n = 0, c_n = 0;
  double f_x0 = 0;
  int p = 0, v = 0;
  double h_base = 0;
  std::size_t n = 0;
};

// (w+ - w-), rescaled to the baseline bandwidth: 1/sqrt(c^{1+2v}), c = h/h_base.
Eigen::VectorXd jump_weights(const Ctx& c, double h) {
  Eigen::VectorXd wp = emp_weights(c.s.x, h, c.p, c.v, c.spec.kernel, Side::plus, c.f_x0);
  Eigen::VectorXd wm = emp_weights(c.s.x, h, c.p, c.v, c.spec.kernel, Side::minus, c.f_x0);
  double scale = 1.0 / std::sqrt(std::pow(h / c.h_base, 1 + 2 * c.v));
  return scale * (wp - wm);
}

Eigen::VectorXd side_weights(const Ctx& c, double h, Side side) {
  Eigen::VectorXd w = emp_weights(c.s.x, h, c.p, c.v, c.spec.kernel, side, c.f_x0);
  double scale = 1.0 / std::sqrt(std::pow(h / c.h_base, 1 + 2 * c.v));
  return scale * w;
}

Eigen::MatrixXd indicator_columns(const std::vector<double>& y,
                                  const std::vector<double>& pts) {
  Eigen::MatrixXd r(y.size(), pts.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      r(i, j) = y[i] <= pts[j] ? 1.0 : 0.0;
  return r;
}

Eigen::MatrixXd arm_indicator_columns(const ObservationSet& s,
                                      const std::vector<double>& pts, int arm) {
  Eigen::MatrixXd r(s.size(), pts.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double in_arm = (s.d[i] == 1.0) == (arm == 1) ? 1.0 : 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j)
      r(i, j) = in_arm * (s.y[i] <= pts[j] ? 1.0 : 0.0);
  }
  return r;
}

std::vector<int> group_labels(const ObservationSet& s) {
  std::set<int> labels(s.g.begin(), s.g.end());
  return {labels.begin(), labels.end()};
}

std::vector<double> theta_grid(const DesignSpec& spec) {
  std::vector<double> t(spec.n_theta);
  if (spec.n_theta == 1) {
    t[0] = 0.5;
    return t;
  }
  double lo = spec.grid_trim, hi = 1.0 - spec.grid_trim;
  for (int j = 0; j < spec.n_theta; ++j)
    t[j] = lo + (hi - lo) * j / (spec.n_theta - 1);
  return t;
}

// y grid over the outcomes inside the estimation window |x| <= h.
std::vector<double> window_y_grid(const ObservationSet& s, double h, int n_y) {
  double mn = 0, mx = 0;
  bool any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(s.x[i]) > h) continue;
    if (!any) {
      mn = mx = s.y[i];
      any = true;
    } else {
      mn = std::min(mn, s.y[i]);
      mx = std::max(mx, s.y[i]);
    }
  }
  if (!any) throw InsufficientLocalData("window_y_grid: no observations in window");
  std::vector<double> g(n_y);
  for (int j = 0; j < n_y; ++j)
    g[j] = mn + (mx - mn) * j / (n_y - 1);
  return g;
}

// Quantiles of a tabulated CDF after clip + monotone rearrangement.
struct QuantileCurve {
  std::vector<double> q;
  int saturation = 0;
};

QuantileCurve quantiles_from_cdf(const std::vector<double>& y_grid,
                                 const Eigen::RowVectorXd& cdf_values,
                                 const std::vector<double>& thetas) {
  GridFunction f;
  f.grid = y_grid;
  f.values.assign(cdf_values.data(), cdf_values.data() + cdf_values.size());
  f = rearrange_monotone(clip_unit(std::move(f)));
  QuantileCurve out;
  out.q.reserve(thetas.size());
  for (double t : thetas) {
    LeftInverse li = left_inverse(f, t);
    out.q.push_back(li.value);
    if (li.saturated) ++out.saturation;
  }
  return out;
}

void check_density(double f, double floor, const char* what) {
  if (!(std::abs(f) >= floor))
    throw DegenerateDensity(std::string(what) + ": conditional density below floor");
}

// One builder output; per-point bandwidth paths concatenate several of these.
struct Part {
  std::vector<double> eval, tau;
  Eigen::MatrixXd scores;  // n x |eval|
  std::vector<std::string> terms;
  Eigen::MatrixXd coef;  // |eval| x |terms|
  std::vector<double> qp, qm, dp, dm;
  int saturation = 0;
  double jump_num = 0, jump_den = 0;
};

// smrd / smrk / fmrd / fmrk / gfmrd. labels empty -> ungrouped.
Part build_mean(const Ctx& c, const std::vector<int>& labels, double h1, double h2) {
  const auto& s = c.s;
  bool grouped = !labels.empty();
  int K = grouped ? static_cast<int>(labels.size()) : 1;
  bool fuzzy = family_needs_d(c.spec.family);
  Eigen::MatrixXd r1(c.n, K), r2;
  if (grouped) {
    for (std::size_t i = 0; i < c.n; ++i)
      for (int l = 0; l < K; ++l)
        r1(i, l) = s.g[i] == labels[l] ? s.y[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < c.n; ++i) r1(i, 0) = s.y[i];
  }
  if (fuzzy) {
    r2.resize(c.n, K);
    if (grouped) {
      for (std::size_t i = 0; i < c.n; ++i)
        for (int l = 0; l < K; ++l)
          r2(i, l) = s.g[i] == labels[l] ? s.d[i] : 0.0;
    } else {
      for (std::size_t i = 0; i < c.n; ++i) r2(i, 0) = s.d[i];
    }
  }

  SidedSolver sp1(s.x, h1, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm1(s.x, h1, c.p, c.spec.kernel, Side::minus);
  Eigen::MatrixXd c1p = sp1.coeffs(r1), c1m = sm1.coeffs(r1);
  Eigen::MatrixXd e1 = residuals(s.x, h1, c.p, r1, c1p, c1m);
  Eigen::VectorXd w1 = jump_weights(c, h1);

  Part part;
  part.scores = Eigen::MatrixXd::Zero(c.n, K);
  part.eval.resize(K);
  part.tau.resize(K);
  for (int l = 0; l < K; ++l) part.eval[l] = grouped ? labels[l] : 0.0;

  if (!fuzzy) {
    double denom = family_needs_slope_jump(c.spec.family) ? *c.spec.known_slope_jump : 1.0;
    part.terms = {"num"};
    part.coef = Eigen::MatrixXd::Zero(K, 1);
    for (int l = 0; l < K; ++l) {
      double a = sp1.derivative(c1p, c.v, l) - sm1.derivative(c1m, c.v, l);
      part.tau[l] = a / denom;
      part.scores.col(l) = (1.0 / denom) * w1.cwiseProduct(e1.col(l));
      part.coef(l, 0) = 1.0 / denom;
      if (l == 0) part.jump_num = a, part.jump_den = denom;
    }
    return part;
  }

  SidedSolver sp2(s.x, h2, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm2(s.x, h2, c.p, c.spec.kernel, Side::minus);
  Eigen::MatrixXd c2p = sp2.coeffs(r2), c2m = sm2.coeffs(r2);
  Eigen::MatrixXd e2 = residuals(s.x, h2, c.p, r2, c2p, c2m);
  Eigen::VectorXd w2 = jump_weights(c, h2);

  part.terms = {"num", "den"};
  part.coef = Eigen::MatrixXd::Zero(K, 2);
  for (int l = 0; l < K; ++l) {
    double a = sp1.derivative(c1p, c.v, l) - sm1.derivative(c1m, c.v, l);
    double b = sp2.derivative(c2p, c.v, l) - sm2.derivative(c2m, c.v, l);
    if (std::abs(b) <= c.spec.eps_denominator)
      throw WeakFirstStage("estimate: first-stage jump below threshold");
    part.tau[l] = a / b;
    part.coef(l, 0) = 1.0 / b;
    part.coef(l, 1) = -a / (b * b);
    part.scores.col(l) = part.coef(l, 0) * w1.cwiseProduct(e1.col(l)) +
                         part.coef(l, 1) * w2.cwiseProduct(e2.col(l));
    if (l == 0) part.jump_num = a, part.jump_den = b;
  }
  return part;
}

Part build_scrd(const Ctx& c, const std::vector<double>& y_pts, double h1) {
  const auto& s = c.s;
  Eigen::MatrixXd r = indicator_columns(s.y, y_pts);
  SidedSolver sp(s.x, h1, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm(s.x, h1, c.p, c.spec.kernel, Side::minus);
  Eigen::MatrixXd cp = sp.coeffs(r), cm = sm.coeffs(r);
  Eigen::MatrixXd e = residuals(s.x, h1, c.p, r, cp, cm);
  Eigen::VectorXd w1 = jump_weights(c, h1);

  int m = static_cast<int>(y_pts.size());
  Part part;
  part.eval = y_pts;
  part.tau.resize(m);
  part.scores = Eigen::MatrixXd::Zero(c.n, m);
  part.terms = {"num"};
  part.coef = Eigen::MatrixXd::Ones(m, 1);
  for (int j = 0; j < m; ++j) {
    part.tau[j] = std::clamp(cp(0, j), 0.0, 1.0) - std::clamp(cm(0, j), 0.0, 1.0);
    part.scores.col(j) = w1.cwiseProduct(e.col(j));
  }
  return part;
}

Part build_sqrd(const Ctx& c, const std::vector<double>& thetas, double h1) {
  const auto& s = c.s;
  std::vector<double> y_grid = window_y_grid(s, h1, c.spec.n_y);
  Eigen::MatrixXd r = indicator_columns(s.y, y_grid);
  SidedSolver sp(s.x, h1, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm(s.x, h1, c.p, c.spec.kernel, Side::minus);
  Eigen::MatrixXd cp = sp.coeffs(r), cm = sm.coeffs(r);

  Part part;
  QuantileCurve qp = quantiles_from_cdf(y_grid, cp.row(0), thetas);
  QuantileCurve qm = quantiles_from_cdf(y_grid, cm.row(0), thetas);
  part.saturation = qp.saturation + qm.saturation;

  int m = static_cast<int>(thetas.size());
  part.eval = thetas;
  part.tau.resize(m);
  part.qp = qp.q;
  part.qm = qm.q;
  part.dp.resize(m);
  part.dm.resize(m);
  for (int j = 0; j < m; ++j) {
    part.tau[j] = qp.q[j] - qm.q[j];
    part.dp[j] = cond_density_at_cutoff(s, qp.q[j], DensitySide::plus, c.a_n, c.spec.kernel);
    part.dm[j] = cond_density_at_cutoff(s, qm.q[j], DensitySide::minus, c.a_n, c.spec.kernel);
    check_density(part.dp[j], c.spec.density_floor, "sqrd plus");
    check_density(part.dm[j], c.spec.density_floor, "sqrd minus");
  }

  Eigen::MatrixXd rqp = indicator_columns(s.y, qp.q);
  Eigen::MatrixXd rqm = indicator_columns(s.y, qm.q);
  Eigen::MatrixXd ep = residuals(s.x, h1, c.p, rqp, sp.coeffs(rqp), sm.coeffs(rqp));
  Eigen::MatrixXd em = residuals(s.x, h1, c.p, rqm, sp.coeffs(rqm), sm.coeffs(rqm));
  Eigen::VectorXd wp = side_weights(c, h1, Side::plus);
  Eigen::VectorXd wm = side_weights(c, h1, Side::minus);

  part.scores = Eigen::MatrixXd::Zero(c.n, m);
  part.terms = {"plus", "minus"};
  part.coef = Eigen::MatrixXd::Zero(m, 2);
  for (int j = 0; j < m; ++j) {
    part.coef(j, 0) = -1.0 / part.dp[j];
    part.coef(j, 1) = 1.0 / part.dm[j];
    part.scores.col(j) = part.coef(j, 0) * wp.cwiseProduct(ep.col(j)) +
                         part.coef(j, 1) * wm.cwiseProduct(em.col(j));
  }
  return part;
}

// Shared first half of the quantile-kink designs: pooled level fit, pooled
// quantiles and densities, one-sided slope fits at those quantiles.
struct KinkLevels {
  std::vector<double> q, dens, phi_plus, phi_minus;
  Eigen::MatrixXd e1;  // residuals of the quantile-point indicators
  int saturation = 0;
};

KinkLevels kink_levels(const Ctx& c, const std::vector<double>& thetas, double h1,
                       SidedSolver& sp, SidedSolver& sm) {
  const auto& s = c.s;
  std::vector<double> y_grid = window_y_grid(s, h1, c.spec.n_y);
  Eigen::MatrixXd r = indicator_columns(s.y, y_grid);
  SidedSolver pooled(s.x, h1, c.p, c.spec.kernel, Side::plus, true);
  Eigen::MatrixXd c0 = pooled.coeffs(r);

  KinkLevels out;
  QuantileCurve q = quantiles_from_cdf(y_grid, c0.row(0), thetas);
  out.saturation = q.saturation;
  out.q = q.q;

  int m = static_cast<int>(thetas.size());
  out.dens.resize(m);
  for (int j = 0; j < m; ++j) {
    out.dens[j] = cond_density_at_cutoff(s, out.q[j], DensitySide::pooled, c.a_n, c.spec.kernel);
    check_density(out.dens[j], c.spec.density_floor, "quantile kink");
  }

  Eigen::MatrixXd rq = indicator_columns(s.y, out.q);
  Eigen::MatrixXd cqp = sp.coeffs(rq), cqm = sm.coeffs(rq);
  out.e1 = residuals(s.x, h1, c.p, rq, cqp, cqm);
  out.phi_plus.resize(m);
  out.phi_minus.resize(m);
  for (int j = 0; j < m; ++j) {
    out.phi_plus[j] = -sp.derivative(cqp, 1, j) / out.dens[j];
    out.phi_minus[j] = -sm.derivative(cqm, 1, j) / out.dens[j];
  }
  return out;
}

Part build_sqrk(const Ctx& c, const std::vector<double>& thetas, double h1) {
  SidedSolver sp(c.s.x, h1, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm(c.s.x, h1, c.p, c.spec.kernel, Side::minus);
  KinkLevels kl = kink_levels(c, thetas, h1, sp, sm);
  double slope = *c.spec.known_slope_jump;
  Eigen::VectorXd w1 = jump_weights(c, h1);

  int m = static_cast<int>(thetas.size());
  Part part;
  part.saturation = kl.saturation;
  part.eval = thetas;
  part.tau.resize(m);
  part.qp = kl.q;
  part.dp = kl.dens;
  part.scores = Eigen::MatrixXd::Zero(c.n, m);
  part.terms = {"num"};
  part.coef = Eigen::MatrixXd::Zero(m, 1);
  part.jump_den = slope;
  for (int j = 0; j < m; ++j) {
    part.tau[j] = (kl.phi_plus[j] - kl.phi_minus[j]) / slope;
    part.coef(j, 0) = -1.0 / (kl.dens[j] * slope);
    part.scores.col(j) = part.coef(j, 0) * w1.cwiseProduct(kl.e1.col(j));
  }
  return part;
}

Part build_fqrk(const Ctx& c, const std::vector<double>& thetas, double h1, double h2) {
  const auto& s = c.s;
  SidedSolver sp(s.x, h1, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm(s.x, h1, c.p, c.spec.kernel, Side::minus);
  KinkLevels kl = kink_levels(c, thetas, h1, sp, sm);

  Eigen::MatrixXd r2(c.n, 1);
  for (std::size_t i = 0; i < c.n; ++i) r2(i, 0) = s.d[i];
  SidedSolver sp2(s.x, h2, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm2(s.x, h2, c.p, c.spec.kernel, Side::minus);
  Eigen::MatrixXd c2p = sp2.coeffs(r2), c2m = sm2.coeffs(r2);
  double b = sp2.derivative(c2p, 1, 0) - sm2.derivative(c2m, 1, 0);
  if (std::abs(b) <= c.spec.eps_denominator)
    throw WeakFirstStage("fqrk: first-stage slope jump below threshold");
  Eigen::MatrixXd e2 = residuals(s.x, h2, c.p, r2, c2p, c2m);

  Eigen::VectorXd w1 = jump_weights(c, h1);
  Eigen::VectorXd w2 = jump_weights(c, h2);

  int m = static_cast<int>(thetas.size());
  Part part;
  part.saturation = kl.saturation;
  part.eval = thetas;
  part.tau.resize(m);
  part.qp = kl.q;
  part.dp = kl.dens;
  part.jump_den = b;
  part.scores = Eigen::MatrixXd::Zero(c.n, m);
  part.terms = {"num", "den"};
  part.coef = Eigen::MatrixXd::Zero(m, 2);
  for (int j = 0; j < m; ++j) {
    double a = kl.phi_plus[j] - kl.phi_minus[j];
    part.tau[j] = a / b;
    part.coef(j, 0) = -1.0 / (kl.dens[j] * b);
    part.coef(j, 1) = -a / (b * b);
    part.scores.col(j) = part.coef(j, 0) * w1.cwiseProduct(kl.e1.col(j)) +
                         part.coef(j, 1) * w2.cwiseProduct(e2.col(0));
  }
  return part;
}

Part build_fqrd(const Ctx& c, const std::vector<double>& thetas, double h1, double h2) {
  const auto& s = c.s;
  std::vector<double> y_grid = window_y_grid(s, h1, c.spec.n_y);
  SidedSolver sp1(s.x, h1, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm1(s.x, h1, c.p, c.spec.kernel, Side::minus);
  SidedSolver sp2(s.x, h2, c.p, c.spec.kernel, Side::plus);
  SidedSolver sm2(s.x, h2, c.p, c.spec.kernel, Side::minus);

  // Arm-d treatment jumps D_d: fit of 1{D=d} across the cutoff (D_0 = -D_1
  // exactly, since the complementary fits sum to the exact constant fit of 1).
  Eigen::MatrixXd r2(c.n, 2);
  for (std::size_t i = 0; i < c.n; ++i) {
    r2(i, 0) = s.d[i] == 1.0 ? 1.0 : 0.0;
    r2(i, 1) = 1.0 - r2(i, 0);
  }
  Eigen::MatrixXd c2p = sp2.coeffs(r2), c2m = sm2.coeffs(r2);
  double arm_jump[2];  // index by arm d
  arm_jump[1] = sp2.derivative(c2p, 0, 0) - sm2.derivative(c2m, 0, 0);
  arm_jump[0] = sp2.derivative(c2p, 0, 1) - sm2.derivative(c2m, 0, 1);
  for (int d : {0, 1})
    if (std::abs(arm_jump[d]) <= c.spec.eps_denominator)
      throw WeakFirstStage("fqrd: first-stage jump below threshold");
  Eigen::MatrixXd e2 = residuals(s.x, h2, c.p, r2, c2p, c2m);

  // Arm-d complier CDFs on the y grid, then quantiles.
  int m = static_cast<int>(thetas.size());
  std::vector<double> q_arm[2];
  int saturation = 0;
  for (int d : {0, 1}) {
    Eigen::MatrixXd r1 = arm_indicator_columns(s, y_grid, d);
    Eigen::MatrixXd cp = sp1.coeffs(r1), cm = sm1.coeffs(r1);
    Eigen::RowVectorXd cdf = (cp.row(0) - cm.row(0)) / arm_jump[d];
    QuantileCurve q = quantiles_from_cdf(y_grid, cdf, thetas);
    saturation += q.saturation;
    q_arm[d] = q.q;
  }

  // Signed complier densities at the arm quantiles (d = 0 is negative by the
  // first-stage sign convention).
  std::vector<double> dens_arm[2];
  for (int d : {0, 1}) {
    dens_arm[d].resize(m);
    for (int j = 0; j < m; ++j) {
      dens_arm[d][j] = complier_density(s, q_arm[d][j], d, arm_jump[d], c.a_n,
                                        c.c_n, c.spec.kernel, c.spec.eps_denominator);
      check_density(dens_arm[d][j], c.spec.density_floor, "fqrd");
    }
  }

  // EMP pieces at the arm quantiles.
  Eigen::MatrixXd e1_arm[2];
  std::vector<double> num_jump_arm[2];  // raw CDF-numerator jump at Q_d
  for (int d : {0, 1}) {
    Eigen::MatrixXd rq = arm_indicator_columns(s, q_arm[d], d);
    Eigen::MatrixXd cp = sp1.coeffs(rq), cm = sm1.coeffs(rq);
    e1_arm[d] = residuals(s.x, h1, c.p, rq, cp, cm);
    num_jump_arm[d].resize(m);
    for (int j = 0; j < m; ++j) num_jump_arm[d][j] = cp(0, j) - cm(0, j);
  }

  Eigen::VectorXd w1 = jump_weights(c, h1);
  Eigen::VectorXd w2 = jump_weights(c, h2);

  Part part;
  part.saturation = saturation;
  part.eval = thetas;
  part.tau.resize(m);
  part.qp = q_arm[1];
  part.qm = q_arm[0];
  part.dp = dens_arm[1];
  part.dm = dens_arm[0];
  part.jump_den = arm_jump[1];
  part.scores = Eigen::MatrixXd::Zero(c.n, m);
  part.terms = {"d1_cdf", "d1_arm", "d0_cdf", "d0_arm"};
  part.coef = Eigen::MatrixXd::Zero(m, 4);
  for (int j = 0; j < m; ++j) {
    part.tau[j] = q_arm[1][j] - q_arm[0][j];
    for (int d : {1, 0}) {
      double fd = dens_arm[d][j];
      double dd = arm_jump[d];
      int col = d == 1 ? 0 : 2;
      part.coef(j, col) = -1.0 / (fd * dd);
      part.coef(j, col + 1) = num_jump_arm[d][j] / (fd * dd * dd);
      part.scores.col(j) += part.coef(j, col) * w1.cwiseProduct(e1_arm[d].col(j)) +
                            part.coef(j, col + 1) *
                                w2.cwiseProduct(e2.col(d == 1 ? 0 : 1));
    }
  }
  return part;
}

Part concat(std::vector<Part> parts, std::size_t n) {
  Part out;
  if (parts.empty()) return out;
  out.terms = parts[0].terms;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.eval.size();
  out.scores = Eigen::MatrixXd::Zero(n, total);
  out.coef = Eigen::MatrixXd::Zero(total, parts[0].coef.cols());
  std::size_t at = 0;
  for (auto& p : parts) {
    std::size_t m = p.eval.size();
    out.eval.insert(out.eval.end(), p.eval.begin(), p.eval.end());
    out.tau.insert(out.tau.end(), p.tau.begin(), p.tau.end());
    out.qp.insert(out.qp.end(), p.qp.begin(), p.qp.end());
    out.qm.insert(out.qm.end(), p.qm.begin(), p.qm.end());
    out.dp.insert(out.dp.end(), p.dp.begin(), p.dp.end());
    out.dm.insert(out.dm.end(), p.dm.begin(), p.dm.end());
    out.saturation += p.saturation;
    out.scores.middleCols(at, m) = p.scores;
    out.coef.middleRows(at, m) = p.coef;
    if (at == 0) {
      out.jump_num = p.jump_num;
      out.jump_den = p.jump_den;
    }
    at += m;
  }
  return out;
}

Bandwidths resolve_bandwidths(const ObservationSet& s, const Bandwidths& in) {
  Bandwidths bw = in;
  if (bw.h1 <= 0) throw std::invalid_argument("estimate: bandwidth h1 must be positive");
  if (bw.h2 <= 0) bw.h2 = bw.h1;
  if (bw.b_n <= 0) bw.b_n = silverman_bandwidth(s.x, -0.2);
  if (bw.c_n <= 0) bw.c_n = silverman_bandwidth(s.x, -0.2);
  if (bw.a_n <= 0) bw.a_n = silverman_bandwidth(s.y, -1.0 / 6.0);
  return bw;
}

}  // namespace

EstimateResult estimate(const ObservationSet& s, const DesignSpec& spec,
                        const Bandwidths& bw_in) {
  validate_design(spec, s);
  Bandwidths bw = resolve_bandwidths(s, bw_in);

  Ctx ctx{s, spec, bw.a_n, bw.c_n, 0.0, spec.order(), spec.v(), bw.h1, s.size()};
  ctx.f_x0 = kde_at_zero(s.x, bw.b_n, spec.kernel);

  // Evaluation points and the per-point bandwidth plan.
  std::vector<double> pts;
  std::vector<int> labels;
  switch (spec.family) {
    case Family::sqrd:
    case Family::fqrd:
    case Family::sqrk:
    case Family::fqrk:
      pts = theta_grid(spec);
      break;
    case Family::scrd:
      pts = window_y_grid(s, bw.h1, spec.n_y);
      break;
    case Family::gfmrd:
      labels = group_labels(s);
      break;
    default:
      break;
  }

  bool per_point = !bw.h1_per_point.empty();
  std::size_t n_pts = spec.family == Family::gfmrd ? labels.size()
                      : pts.empty()                ? 1
                                                   : pts.size();
  if (per_point && bw.h1_per_point.size() != n_pts)
    throw std::invalid_argument("estimate: h1_per_point size mismatch");
  if (!bw.h2_per_point.empty() && bw.h2_per_point.size() != n_pts)
    throw std::invalid_argument("estimate: h2_per_point size mismatch");
  if (per_point && !family_is_quantile(spec.family) &&
      spec.family != Family::scrd && spec.family != Family::gfmrd)
    per_point = false;  // scalar mean designs have a single bandwidth

  auto h1_at = [&](std::size_t j) {
    return per_point ? bw.h1_per_point[j] : bw.h1;
  };
  auto h2_at = [&](std::size_t j) {
    return !bw.h2_per_point.empty() ? bw.h2_per_point[j] : bw.h2;
  };

  auto build_one = [&](const std::vector<double>& sub_pts,
                       const std::vector<int>& sub_labels, double h1,
                       double h2) -> Part {
    switch (spec.family) {
      case Family::smrd:
      case Family::smrk:
      case Family::fmrd:
      case Family::fmrk:
        return build_mean(ctx, {}, h1, h2);
      case Family::gfmrd:
        return build_mean(ctx, sub_labels, h1, h2);
      case Family::scrd:
        return build_scrd(ctx, sub_pts, h1);
      case Family::sqrd:
        return build_sqrd(ctx, sub_pts, h1);
      case Family::sqrk:
        return build_sqrk(ctx, sub_pts, h1);
      case Family::fqrk:
        return build_fqrk(ctx, sub_pts, h1, h2);
      case Family::fqrd:
        return build_fqrd(ctx, sub_pts, h1, h2);
    }
    throw std::logic_error("estimate: unreachable");
  };

  Part part;
  if (per_point) {
    std::vector<Part> parts;
    parts.reserve(n_pts);
    for (std::size_t j = 0; j < n_pts; ++j) {
      std::vector<double> sub_pts;
      std::vector<int> sub_labels;
      if (spec.family == Family::gfmrd)
        sub_labels = {labels[j]};
      else
        sub_pts = {pts[j]};
      parts.push_back(build_one(sub_pts, sub_labels, h1_at(j), h2_at(j)));
    }
    part = concat(std::move(parts), ctx.n);
  } else {
    part = build_one(pts, labels, bw.h1, bw.h2);
  }

  EstimateResult out;
  out.family = spec.family;
  out.v = ctx.v;
  out.n = ctx.n;
  out.eval = std::move(part.eval);
  out.tau = std::move(part.tau);
  out.h1 = bw.h1;
  out.h2 = family_components(spec.family) == 2 ? bw.h2 : 0.0;
  out.h_base = ctx.h_base;
  out.stat_scale = std::sqrt(static_cast<double>(ctx.n) *
                             std::pow(ctx.h_base, 1 + 2 * ctx.v));
  out.f_x0 = ctx.f_x0;
  out.saturation_count = part.saturation;
  out.jump_num = part.jump_num;
  out.jump_den = part.jump_den;
  out.q_plus = std::move(part.qp);
  out.q_minus = std::move(part.qm);
  out.dens_plus = std::move(part.dp);
  out.dens_minus = std::move(part.dm);
  out.hadamard.terms = std::move(part.terms);
  out.hadamard.coef = std::move(part.coef);
  out.scores = std::move(part.scores);
  return out;
}

std::vector<double> estimate_tau(const ObservationSet& s, const DesignSpec& spec,
                                 const Bandwidths& bw) {
  return estimate(s, spec, bw).tau;
}

HadamardCoefficients hadamard_coefficients(const ObservationSet& s,
                                           const DesignSpec& spec,
                                           const Bandwidths& bw) {
  return estimate(s, spec, bw).hadamard;
}

WaldComponents estimate_components(const ObservationSet& s,
                                   const DesignSpec& spec,
                                   const Bandwidths& bw_in) {
  validate_design(spec, s);
  Bandwidths bw = resolve_bandwidths(s, bw_in);
  int p = spec.order(), v = spec.v();

  WaldComponents out;
  out.f_x0 = kde_at_zero(s.x, bw.b_n, spec.kernel);

  auto add = [&](int k, double label, const Eigen::VectorXd& resp, double h) {
    ComponentFit cf;
    cf.k = k;
    cf.label = label;
    cf.plus = fit_one_sided(s.x, resp, h, p, spec.kernel, Side::plus);
    cf.minus = fit_one_sided(s.x, resp, h, p, spec.kernel, Side::minus);
    cf.jump = cf.plus.derivative(v) - cf.minus.derivative(v);
    out.comps.push_back(std::move(cf));
  };

  std::size_t n = s.size();
  Eigen::VectorXd y(n), d(n);
  for (std::size_t i = 0; i < n; ++i) y(i) = s.y[i];
  if (s.has_d())
    for (std::size_t i = 0; i < n; ++i) d(i) = s.d[i];

  auto median_indicator = [&](int arm) {
    std::vector<double> ys = s.y;
    std::nth_element(ys.begin(), ys.begin() + ys.size() / 2, ys.end());
    double med = ys[ys.size() / 2];
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) {
      bool ok = s.y[i] <= med;
      if (arm >= 0) ok = ok && ((s.d[i] == 1.0) == (arm == 1));
      r(i) = ok ? 1.0 : 0.0;
    }
    return r;
  };

  switch (spec.family) {
    case Family::smrd:
    case Family::smrk:
      add(1, 0, y, bw.h1);
      break;
    case Family::fmrd:
    case Family::fmrk:
      add(1, 0, y, bw.h1);
      add(2, 0, d, bw.h2);
      break;
    case Family::gfmrd:
      for (int l : group_labels(s)) {
        Eigen::VectorXd ry(n), rd(n);
        for (std::size_t i = 0; i < n; ++i) {
          ry(i) = s.g[i] == l ? s.y[i] : 0.0;
          rd(i) = s.g[i] == l ? s.d[i] : 0.0;
        }
        add(1, l, ry, bw.h1);
        add(2, l, rd, bw.h2);
      }
      break;
    case Family::scrd:
    case Family::sqrd:
    case Family::sqrk:
      add(1, 0, median_indicator(-1), bw.h1);
      break;
    case Family::fqrk:
      add(1, 0, median_indicator(-1), bw.h1);
      add(2, 0, d, bw.h2);
      break;
    case Family::fqrd:
      for (int arm : {1, 0}) {
        Eigen::VectorXd rd(n);
        for (std::size_t i = 0; i < n; ++i)
          rd(i) = (s.d[i] == 1.0) == (arm == 1) ? 1.0 : 0.0;
        add(1, arm, median_indicator(arm), bw.h1);
        add(2, arm, rd, bw.h2);
      }
      break;
  }
  return out;
}

}  // namespace rdu
