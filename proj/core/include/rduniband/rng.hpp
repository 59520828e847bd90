#pragma once

#include <cstdint>
#include <random>

namespace rdu {

// Deterministic seed lineage: every random stream is keyed by (master seed,
// stream index), so results are independent of scheduling and thread count.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

// Random stream with platform-independent output. std::normal_distribution is
// implementation-defined, so normals come from Box-Muller on fixed-layout
// uniforms.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform_open01() {  // (0, 1]
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }
  double normal();
  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace rdu
