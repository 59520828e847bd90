#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rduniband/bandwidth.hpp"
#include "rduniband/designs.hpp"
#include "rduniband/types.hpp"

namespace rdu {

// Simulation designs: the main fuzzy-quantile process, the simple
// quadratic-trend processes (one per family), and the two Lee / Ludwig-Miller
// benchmark processes with X ~ 2*Beta(2,4) - 1.
enum class Dgp {
  smrd_simple,
  fmrd_simple,
  smrk_simple,
  fmrk_simple,
  sqrd_simple,
  sqrk_simple,
  fqrk_simple,
  gfmrd_simple,
  fqrd_main,
  cct_lee,
  cct_ludwig_miller,
};

Dgp dgp_from_string(const std::string& name);
const char* to_string(Dgp d);

struct DgpSpec {
  Dgp family = Dgp::fqrd_main;
  std::size_t n = 2000;
  double beta1 = 0;   // level shift of the treatment effect
  double gamma1 = 0;  // scale heterogeneity (quantile processes)
  double beta2 = 0;   // group-2 effect (grouped process)
};

// Draw order is fixed per observation (Gaussian triple/pair first, then any
// auxiliary uniform; benchmark processes draw the six exponentials of the
// beta variate before the Gaussian noise) so datasets are reproducible for a
// given (spec, seed) independent of platform.
ObservationSet generate(const DgpSpec& spec, std::uint64_t seed);

// The estimand family each process was built for, and the known slope jump
// of the sharp-kink assignments.
Family default_family(Dgp d);
std::optional<double> default_slope_jump(Dgp d);

// True effect curve on the evaluation grid: constants for mean designs,
// beta1 + gamma1 * F^{-1}_{U|X}(theta|0) for quantile designs, and the
// normal-CDF contrast for the distributional design. Throws
// std::invalid_argument for unsupported (dgp, family) pairs.
std::vector<double> true_curve(const DgpSpec& spec, Family family,
                               const std::vector<double>& eval);

enum class McCheck { nullity, homogeneity, coverage };
McCheck mc_check_from_string(const std::string& name);
const char* to_string(McCheck c);

struct McConfig {
  DgpSpec dgp;
  DesignSpec design;
  BandwidthConfig bandwidth;
  int R = 400;
  int B = 500;
  double level = 0.05;
  McCheck check = McCheck::nullity;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 -> hardware / RD_UNIBAND_THREADS
};

struct McReport {
  Dgp dgp = Dgp::fqrd_main;
  Family family = Family::fqrd;
  McCheck check = McCheck::nullity;
  std::size_t n = 0;
  int R = 0;
  int B = 0;
  double level = 0.05;
  // Acceptance (non-rejection) or coverage frequency among the replications
  // that completed, with the binomial Monte Carlo standard error.
  double rate = 0;
  double se = 0;
  int successes = 0;
  int failures = 0;
  double failure_rate = 0;
  bool flagged = false;  // > 5% of replications failed
  double mean_h1 = 0, mean_h2 = 0;
  double seconds = 0;
};

// R independent replications: generate, select bandwidths, estimate,
// bootstrap B draws, record the requested indicator. Per-replication domain
// failures are counted and excluded. The report is identical for identical
// (config, seed) regardless of the thread count.
McReport run_monte_carlo(const McConfig& cfg);

}  // namespace rdu
