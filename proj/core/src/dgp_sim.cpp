#include "rduniband/dgp_sim.hpp"

#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "rduniband/bootstrap.hpp"
#include "rduniband/rng.hpp"
#include "rduniband/threads.hpp"

namespace rdu {

namespace {

double quad_trend(double x) { return 1.0 + 0.1 * x + 0.01 * x * x; }

double lee_trend(double x, bool with_intercept) {
  if (x < 0)
    return (with_intercept ? 0.48 : 0.0) +
           x * (1.27 + x * (7.18 + x * (20.21 + x * (21.54 + x * 7.33))));
  return (with_intercept ? 0.52 : 0.0) +
         x * (0.84 + x * (-3.00 + x * (7.99 + x * (-9.01 + x * 3.56))));
}

double ludwig_miller_trend(double x) {
  if (x < 0)
    return 3.71 + x * (2.30 + x * (3.28 + x * (1.45 + x * (0.23 + x * 0.03))));
  return 0.26 +
         x * (18.49 + x * (-54.81 + x * (74.30 + x * (-45.02 + x * 9.83))));
}

struct TriDraw {
  double x, u, v;
};

// (X, U, V) ~ N(0, Sigma) with rho_XV = 0, via the Cholesky factor of the
// correlation matrix applied to three i.i.d. standard normals.
TriDraw draw_trivariate(Stream& rng, double sx, double su, double sv,
                        double rho_xu, double rho_uv) {
  double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
  double l22 = std::sqrt(1 - rho_xu * rho_xu);
  double l32 = rho_uv / l22;
  double l33 = std::sqrt(1 - l32 * l32);
  return {sx * z1, su * (rho_xu * z1 + l22 * z2), sv * (l32 * z2 + l33 * z3)};
}

// Beta(2,4) as a gamma ratio: Gamma(2) / (Gamma(2) + Gamma(4)) with the
// gammas summed from exponentials, six uniforms per draw.
double draw_beta24(Stream& rng) {
  double g1 = 0, g2 = 0;
  for (int i = 0; i < 2; ++i) g1 -= std::log(rng.uniform_open01());
  for (int i = 0; i < 4; ++i) g2 -= std::log(rng.uniform_open01());
  return g1 / (g1 + g2);
}

// sd of U | X = 0 under the Gaussian designs.
double cond_sigma(Dgp d) {
  if (d == Dgp::fqrd_main) return 0.1295 * std::sqrt(1 - 0.25 * 0.25);
  return std::sqrt(1 - 0.5 * 0.5);
}

bool is_simple(Dgp d) {
  switch (d) {
    case Dgp::smrd_simple:
    case Dgp::fmrd_simple:
    case Dgp::smrk_simple:
    case Dgp::fmrk_simple:
    case Dgp::sqrd_simple:
    case Dgp::sqrk_simple:
    case Dgp::fqrk_simple:
    case Dgp::gfmrd_simple:
      return true;
    default:
      return false;
  }
}

}  // namespace

Dgp dgp_from_string(const std::string& name) {
  if (name == "smrd_simple") return Dgp::smrd_simple;
  if (name == "fmrd_simple") return Dgp::fmrd_simple;
  if (name == "smrk_simple") return Dgp::smrk_simple;
  if (name == "fmrk_simple") return Dgp::fmrk_simple;
  if (name == "sqrd_simple") return Dgp::sqrd_simple;
  if (name == "sqrk_simple") return Dgp::sqrk_simple;
  if (name == "fqrk_simple") return Dgp::fqrk_simple;
  if (name == "gfmrd_simple") return Dgp::gfmrd_simple;
  if (name == "fqrd_main") return Dgp::fqrd_main;
  if (name == "cct_lee") return Dgp::cct_lee;
  if (name == "cct_ludwig_miller") return Dgp::cct_ludwig_miller;
  throw std::invalid_argument("unknown dgp: " + name);
}

const char* to_string(Dgp d) {
  switch (d) {
    case Dgp::smrd_simple: return "smrd_simple";
    case Dgp::fmrd_simple: return "fmrd_simple";
    case Dgp::smrk_simple: return "smrk_simple";
    case Dgp::fmrk_simple: return "fmrk_simple";
    case Dgp::sqrd_simple: return "sqrd_simple";
    case Dgp::sqrk_simple: return "sqrk_simple";
    case Dgp::fqrk_simple: return "fqrk_simple";
    case Dgp::gfmrd_simple: return "gfmrd_simple";
    case Dgp::fqrd_main: return "fqrd_main";
    case Dgp::cct_lee: return "cct_lee";
    case Dgp::cct_ludwig_miller: return "cct_ludwig_miller";
  }
  return "?";
}

ObservationSet generate(const DgpSpec& spec, std::uint64_t seed) {
  if (spec.n < 1) throw std::invalid_argument("generate: n >= 1");
  Stream rng(seed);
  ObservationSet out;
  out.x.resize(spec.n);
  out.y.resize(spec.n);
  out.d.resize(spec.n);
  if (spec.family == Dgp::gfmrd_simple) out.g.resize(spec.n);

  for (std::size_t i = 0; i < spec.n; ++i) {
    double x, u, d, y;
    switch (spec.family) {
      case Dgp::smrd_simple:
      case Dgp::smrk_simple:
      case Dgp::sqrd_simple:
      case Dgp::sqrk_simple: {
        double z1 = rng.normal(), z2 = rng.normal();
        x = z1;
        u = 0.5 * z1 + std::sqrt(0.75) * z2;
        bool kink = spec.family == Dgp::smrk_simple ||
                    spec.family == Dgp::sqrk_simple;
        d = kink ? std::abs(x) : (x >= 0 ? 1.0 : 0.0);
        bool scaled = spec.family == Dgp::sqrd_simple ||
                      spec.family == Dgp::sqrk_simple;
        y = quad_trend(x) + spec.beta1 * d +
            (scaled ? (1 + spec.gamma1 * d) : 1.0) * u;
        break;
      }
      case Dgp::fmrd_simple:
      case Dgp::fmrk_simple:
      case Dgp::fqrk_simple: {
        double sv = spec.family == Dgp::fmrd_simple ? 0.5 : 0.1;
        TriDraw t = draw_trivariate(rng, 1.0, 1.0, sv, 0.5, 0.5);
        x = t.x;
        u = t.u;
        if (spec.family == Dgp::fmrd_simple)
          d = 2.0 * (x >= 0 ? 1.0 : 0.0) - 1.0 >= t.v ? 1.0 : 0.0;
        else
          d = std::abs(x) + t.v;
        bool scaled = spec.family == Dgp::fqrk_simple;
        y = quad_trend(x) + spec.beta1 * d +
            (scaled ? (1 + spec.gamma1 * d) : 1.0) * u;
        break;
      }
      case Dgp::gfmrd_simple: {
        TriDraw t = draw_trivariate(rng, 1.0, 1.0, 0.5, 0.5, 0.5);
        int gi = rng.uniform01() < 0.5 ? 2 : 1;
        x = t.x;
        u = t.u;
        d = 2.0 * (x >= 0 ? 1.0 : 0.0) - 1.0 >= t.v ? 1.0 : 0.0;
        double beta = gi == 1 ? spec.beta1 : spec.beta2;
        y = quad_trend(x) + beta * d + u;
        out.g[i] = gi;
        break;
      }
      case Dgp::fqrd_main: {
        TriDraw t = draw_trivariate(rng, 0.1781742, 0.1295, 0.5, 0.25, 0.25);
        x = t.x;
        u = t.u;
        d = 2.0 * (x >= 0 ? 1.0 : 0.0) - 1.0 >= t.v ? 1.0 : 0.0;
        y = lee_trend(x, false) + spec.beta1 * d + (1 + spec.gamma1 * d) * u;
        break;
      }
      case Dgp::cct_lee:
      case Dgp::cct_ludwig_miller: {
        x = 2.0 * draw_beta24(rng) - 1.0;
        u = 0.1295 * rng.normal();
        d = x >= 0 ? 1.0 : 0.0;
        y = (spec.family == Dgp::cct_lee ? lee_trend(x, true)
                                         : ludwig_miller_trend(x)) +
            u;
        break;
      }
      default:
        throw std::invalid_argument("generate: unknown dgp");
    }
    out.x[i] = x;
    out.y[i] = y;
    out.d[i] = d;
  }
  return out;
}

Family default_family(Dgp d) {
  switch (d) {
    case Dgp::smrd_simple: return Family::smrd;
    case Dgp::fmrd_simple: return Family::fmrd;
    case Dgp::smrk_simple: return Family::smrk;
    case Dgp::fmrk_simple: return Family::fmrk;
    case Dgp::sqrd_simple: return Family::sqrd;
    case Dgp::sqrk_simple: return Family::sqrk;
    case Dgp::fqrk_simple: return Family::fqrk;
    case Dgp::gfmrd_simple: return Family::gfmrd;
    case Dgp::fqrd_main: return Family::fqrd;
    case Dgp::cct_lee:
    case Dgp::cct_ludwig_miller: return Family::smrd;
  }
  return Family::smrd;
}

std::optional<double> default_slope_jump(Dgp d) {
  if (d == Dgp::smrk_simple || d == Dgp::sqrk_simple) return 2.0;
  return std::nullopt;
}

std::vector<double> true_curve(const DgpSpec& spec, Family family,
                               const std::vector<double>& eval) {
  boost::math::normal norm;
  std::vector<double> out(eval.size());
  switch (family) {
    case Family::smrd:
    case Family::fmrd:
    case Family::smrk:
    case Family::fmrk: {
      double tau;
      if (spec.family == Dgp::cct_lee)
        tau = 0.52 - 0.48;
      else if (spec.family == Dgp::cct_ludwig_miller)
        tau = 0.26 - 3.71;
      else if (is_simple(spec.family))
        tau = spec.beta1;
      else
        throw std::invalid_argument("true_curve: no mean effect for this dgp");
      for (auto& t : out) t = tau;
      return out;
    }
    case Family::gfmrd: {
      if (spec.family != Dgp::gfmrd_simple)
        throw std::invalid_argument("true_curve: grouped effect needs gfmrd dgp");
      for (std::size_t j = 0; j < eval.size(); ++j)
        out[j] = eval[j] == 1.0 ? spec.beta1 : spec.beta2;
      return out;
    }
    case Family::sqrd:
    case Family::sqrk:
    case Family::fqrk:
    case Family::fqrd: {
      if (!is_simple(spec.family) && spec.family != Dgp::fqrd_main)
        throw std::invalid_argument("true_curve: no quantile effect for this dgp");
      double sigma = cond_sigma(spec.family);
      for (std::size_t j = 0; j < eval.size(); ++j)
        out[j] = spec.beta1 +
                 spec.gamma1 * sigma * boost::math::quantile(norm, eval[j]);
      return out;
    }
    case Family::scrd: {
      // F_{Y|X}(y | 0+) - F_{Y|X}(y | 0-) under the simple Gaussian designs
      // with D = 1{X >= 0} and mu(0) = 1.
      if (spec.family != Dgp::smrd_simple && spec.family != Dgp::sqrd_simple)
        throw std::invalid_argument("true_curve: no CDF contrast for this dgp");
      double sigma = cond_sigma(spec.family);
      for (std::size_t j = 0; j < eval.size(); ++j) {
        double zp = (eval[j] - 1.0 - spec.beta1) / ((1 + spec.gamma1) * sigma);
        double zm = (eval[j] - 1.0) / sigma;
        out[j] = boost::math::cdf(norm, zp) - boost::math::cdf(norm, zm);
      }
      return out;
    }
  }
  throw std::invalid_argument("true_curve: unsupported family");
}

McCheck mc_check_from_string(const std::string& name) {
  if (name == "nullity") return McCheck::nullity;
  if (name == "homogeneity") return McCheck::homogeneity;
  if (name == "coverage") return McCheck::coverage;
  throw std::invalid_argument("unknown check: " + name);
}

const char* to_string(McCheck c) {
  switch (c) {
    case McCheck::nullity: return "nullity";
    case McCheck::homogeneity: return "homogeneity";
    case McCheck::coverage: return "coverage";
  }
  return "?";
}

McReport run_monte_carlo(const McConfig& cfg) {
  if (cfg.R < 1 || cfg.B < 1)
    throw std::invalid_argument("run_monte_carlo: R, B >= 1");
  auto t0 = std::chrono::steady_clock::now();

  // Per-replication outcome: 1 accept/cover, 0 not, -1 failed.
  std::vector<int> outcome(cfg.R, -1);
  std::vector<double> h1s(cfg.R, 0), h2s(cfg.R, 0);

  parallel_for(cfg.R, thread_budget(cfg.threads), [&](std::size_t r) {
    std::uint64_t data_seed = derive_seed(cfg.seed, r, 0);
    std::uint64_t boot_seed = derive_seed(cfg.seed, r, 1);
    try {
      ObservationSet data = generate(cfg.dgp, data_seed);
      SelectedBandwidths sel = select_bandwidths(data, cfg.design, cfg.bandwidth);
      EstimateResult est = estimate(data, cfg.design, sel.bw);
      Eigen::MatrixXd draws = run_bootstrap(est.scores, cfg.B, boot_seed, 1);
      bool accept;
      switch (cfg.check) {
        case McCheck::nullity:
          accept = !test_uniform_nullity(est.tau, draws, cfg.level,
                                         est.stat_scale)
                        .reject;
          break;
        case McCheck::homogeneity:
          accept = !test_homogeneity(est.tau, draws, cfg.level, est.stat_scale)
                        .reject;
          break;
        case McCheck::coverage: {
          BandResult band =
              uniform_band(est.tau, draws, cfg.level, est.stat_scale);
          std::vector<double> truth =
              true_curve(cfg.dgp, cfg.design.family, est.eval);
          accept = true;
          for (std::size_t j = 0; j < truth.size(); ++j)
            if (truth[j] < band.lo[j] || truth[j] > band.hi[j]) {
              accept = false;
              break;
            }
          break;
        }
        default:
          throw std::invalid_argument("run_monte_carlo: unknown check");
      }
      outcome[r] = accept ? 1 : 0;
      h1s[r] = sel.bw.h1;
      h2s[r] = sel.bw.h2 > 0 ? sel.bw.h2 : sel.bw.h1;
    } catch (const std::runtime_error&) {
      outcome[r] = -1;  // domain failure: counted and excluded
    }
  });

  McReport rep;
  rep.dgp = cfg.dgp.family;
  rep.family = cfg.design.family;
  rep.check = cfg.check;
  rep.n = cfg.dgp.n;
  rep.R = cfg.R;
  rep.B = cfg.B;
  rep.level = cfg.level;
  int hits = 0;
  for (int r = 0; r < cfg.R; ++r) {
    if (outcome[r] < 0) {
      ++rep.failures;
      continue;
    }
    ++rep.successes;
    hits += outcome[r];
    rep.mean_h1 += h1s[r];
    rep.mean_h2 += h2s[r];
  }
  rep.failure_rate = static_cast<double>(rep.failures) / cfg.R;
  rep.flagged = rep.failure_rate > 0.05;
  if (rep.successes > 0) {
    rep.rate = static_cast<double>(hits) / rep.successes;
    rep.se = std::sqrt(rep.rate * (1 - rep.rate) / rep.successes);
    rep.mean_h1 /= rep.successes;
    rep.mean_h2 /= rep.successes;
  }
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

}  // namespace rdu
