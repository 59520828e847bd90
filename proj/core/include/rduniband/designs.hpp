#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rduniband/cdfquant.hpp"
#include "rduniband/kernels.hpp"
#include "rduniband/localpoly.hpp"
#include "rduniband/types.hpp"

namespace rdu {

// The ten local Wald designs: sharp/fuzzy x mean/quantile x jump/kink, plus
// the distributional-jump and grouped-fuzzy designs.
enum class Family {
  smrd,   // sharp mean jump
  fmrd,   // fuzzy mean jump
  smrk,   // sharp mean kink (known slope jump)
  fmrk,   // fuzzy mean kink
  scrd,   // sharp distributional (CDF) jump
  sqrd,   // sharp quantile jump
  fqrd,   // fuzzy quantile jump (compliers)
  sqrk,   // sharp quantile kink (known slope jump)
  fqrk,   // fuzzy quantile kink
  gfmrd,  // grouped fuzzy mean jump
};

Family family_from_string(const std::string& name);
const char* to_string(Family f);
int family_order(Family f);  // v: 0 for jump designs, 1 for kink designs
bool family_needs_d(Family f);
bool family_needs_g(Family f);
bool family_needs_slope_jump(Family f);
bool family_is_quantile(Family f);
int family_components(Family f);  // bandwidth components (1 or 2)

struct DesignSpec {
  Family family = Family::smrd;
  Kernel kernel = Kernel::epanechnikov;
  int p = 0;  // local polynomial order; 0 -> v + 2
  int n_theta = 31;
  int n_y = 2000;
  double grid_trim = 0.2;  // theta grid spans [a, 1-a]
  std::optional<double> known_slope_jump;
  double eps_denominator = 1e-6;
  double density_floor = 1e-4;

  int v() const { return family_order(family); }
  int order() const { return p > 0 ? p : v() + 2; }
};

// Throws MissingSlopeJump / std::invalid_argument when the spec and data
// columns do not line up.
void validate_design(const DesignSpec& spec, const ObservationSet& s);

struct Bandwidths {
  double h1 = 0;  // component 1 (outcome side); the baseline h_n
  double h2 = 0;  // component 2 (treatment side); <= 0 falls back to h1
  // Optional per-grid-point overrides for the outcome component of the
  // quantile / distributional / grouped designs (sizes must match the grid).
  std::vector<double> h1_per_point;
  std::vector<double> h2_per_point;
  // Density bandwidths; <= 0 -> Silverman defaults (a_n from sd(y) at
  // n^{-1/6}, b_n and c_n from sd(x) at n^{-1/5}).
  double a_n = 0, b_n = 0, c_n = 0;
};

// First-stage one-sided fits and cutoff jumps, one entry per component
// (fuzzy designs: k = 1 outcome, k = 2 treatment; grouped designs: per group;
// quantile designs: the median-level indicator response).
struct ComponentFit {
  int k = 1;
  double label = 0;  // group label or treatment arm where applicable
  LocalFit plus, minus;
  double jump = 0;  // v-th derivative jump across the cutoff
};

struct WaldComponents {
  std::vector<ComponentFit> comps;
  double f_x0 = 0;
};

WaldComponents estimate_components(const ObservationSet& s,
                                   const DesignSpec& spec,
                                   const Bandwidths& bw);

// Coefficients of the estimand's Hadamard derivative: per evaluation point,
// the scalars multiplying each component's baseline-scaled bootstrap draw.
struct HadamardCoefficients {
  std::vector<std::string> terms;
  Eigen::MatrixXd coef;  // |eval| x |terms|
};

struct EstimateResult {
  Family family = Family::smrd;
  int v = 0;
  std::size_t n = 0;
  // Evaluation grid: theta (quantile designs), y (distributional), group
  // labels (grouped), {0} (scalar mean designs).
  std::vector<double> eval;
  std::vector<double> tau;
  double h1 = 0, h2 = 0;
  double h_base = 0;       // baseline bandwidth (component 1)
  double stat_scale = 0;   // sqrt(n * h_base^{1+2v})
  double f_x0 = 0;
  int saturation_count = 0;
  double jump_num = 0, jump_den = 0;  // scalar jumps where meaningful
  std::vector<double> q_plus, q_minus;        // quantile curves (pooled -> q_plus)
  std::vector<double> dens_plus, dens_minus;  // densities at those quantiles
  HadamardCoefficients hadamard;
  // Collapsed score plan: bootstrap draw b of the process at eval point j is
  // G'_b(j) = sum_i xi_b(i) * scores(i, j), already on the baseline scale.
  Eigen::MatrixXd scores;
};

EstimateResult estimate(const ObservationSet& s, const DesignSpec& spec,
                        const Bandwidths& bw);

std::vector<double> estimate_tau(const ObservationSet& s, const DesignSpec& spec,
                                 const Bandwidths& bw);
HadamardCoefficients hadamard_coefficients(const ObservationSet& s,
                                           const DesignSpec& spec,
                                           const Bandwidths& bw);

}  // namespace rdu
