#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdu {

// Cutoff side. Observations at x == 0 belong to BOTH sides (delta+ = 1{x>=0},
// delta- = 1{x<=0}); estimation at the cutoff from the right uses the plus fit.
enum class Side { plus, minus };

inline const char* to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

// A dataset: running variable x and outcome y always present; treatment d and
// group labels g optional depending on the design.
struct ObservationSet {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> d;  // empty when the design has no treatment column
  std::vector<int> g;     // empty when the design has no group column

  std::size_t size() const { return x.size(); }
  bool has_d() const { return !d.empty(); }
  bool has_g() const { return !g.empty(); }
};

struct InsufficientLocalData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfWindow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateDensity : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateSample : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateCell : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WeakFirstStage : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingSlopeJump : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VanishingBias : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rdu
