#include <benchmark/benchmark.h>

#include "rduniband/bandwidth.hpp"
#include "rduniband/bootstrap.hpp"
#include "rduniband/designs.hpp"
#include "rduniband/dgp_sim.hpp"
#include "rduniband/localpoly.hpp"

namespace {

rdu::ObservationSet make_data(std::size_t n, rdu::Dgp dgp) {
  rdu::DgpSpec spec;
  spec.family = dgp;
  spec.n = n;
  return rdu::generate(spec, 7);
}

void bm_local_fit(benchmark::State& state) {
  auto data = make_data(static_cast<std::size_t>(state.range(0)),
                        rdu::Dgp::smrd_simple);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      data.y.data(), static_cast<Eigen::Index>(data.y.size()));
  for (auto _ : state) {
    auto fit = rdu::fit_one_sided(data.x, y, 0.5, 2, rdu::Kernel::epanechnikov,
                                  rdu::Side::plus);
    benchmark::DoNotOptimize(fit.coeffs);
  }
}
BENCHMARK(bm_local_fit)->Arg(2000)->Arg(20000);

void bm_estimate_fqrd(benchmark::State& state) {
  auto data = make_data(static_cast<std::size_t>(state.range(0)),
                        rdu::Dgp::fqrd_main);
  rdu::DesignSpec spec;
  spec.family = rdu::Family::fqrd;
  rdu::BandwidthConfig cfg;
  auto sel = rdu::select_bandwidths(data, spec, cfg);
  for (auto _ : state) {
    auto est = rdu::estimate(data, spec, sel.bw);
    benchmark::DoNotOptimize(est.scores);
  }
}
BENCHMARK(bm_estimate_fqrd)->Arg(2000);

void bm_bootstrap(benchmark::State& state) {
  auto data = make_data(2000, rdu::Dgp::fqrd_main);
  rdu::DesignSpec spec;
  spec.family = rdu::Family::fqrd;
  rdu::BandwidthConfig cfg;
  auto sel = rdu::select_bandwidths(data, spec, cfg);
  auto est = rdu::estimate(data, spec, sel.bw);
  for (auto _ : state) {
    auto draws = rdu::run_bootstrap(est.scores, static_cast<int>(state.range(0)),
                                    11, 1);
    benchmark::DoNotOptimize(draws);
  }
}
BENCHMARK(bm_bootstrap)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
