#include <benchmark/benchmark.h>

#include <vector>

#include "nanoguide/core.hpp"
#include "nanoguide/dynamics.hpp"
#include "nanoguide/inference.hpp"
#include "nanoguide/linear_scattering.hpp"
#include "nanoguide/photostream.hpp"
#include "nanoguide/pump_probe.hpp"

using namespace nanoguide;

namespace {

Emitter bench_emitter() {
  Emitter e;
  e.beta = 0.074;
  e.alpha = 0.5;
  return e;
}

void BM_SingleResponse(benchmark::State& state) {
  const Emitter e = bench_emitter();
  const SpectralGrid grid(-150.0, 150.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(single_emitter_response(e, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SingleResponse)->Arg(301)->Arg(10001);

void BM_Resolvent(benchmark::State& state) {
  const DressedEmitter d(bench_emitter(), {RabiFrequency::in_gamma0(1.5), 0.0});
  double delta = -300.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(d.probe_transmission(delta));
    delta = delta > 300.0 ? -300.0 : delta + 0.7;
  }
}
BENCHMARK(BM_Resolvent);

void BM_SteadyState(benchmark::State& state) {
  const LiouvilleProblem p = LiouvilleProblem::driven(bench_emitter(), {RabiFrequency::in_gamma0(0.9), 5.0});
  for (auto _ : state) benchmark::DoNotOptimize(steady_state(build_liouvillian(p)));
}
BENCHMARK(BM_SteadyState);

void BM_StreamSimulation(benchmark::State& state) {
  Emitter e = bench_emitter();
  e.beta = 1.0;
  const LiouvilleProblem p = LiouvilleProblem::driven(e, {RabiFrequency::in_gamma0(0.9), 0.0});
  std::uint64_t seed = 1;
  std::int64_t photons = 0;
  for (auto _ : state) {
    const auto s = simulate_stream(p, e, static_cast<double>(state.range(0)), seed++);
    photons += static_cast<std::int64_t>(s.size());
  }
  state.SetItemsProcessed(photons);
}
BENCHMARK(BM_StreamSimulation)->Arg(100000);

void BM_LorentzianFit(benchmark::State& state) {
  const Emitter e = bench_emitter();
  const SpectralGrid grid(-150.0, 150.0, 301);
  const auto y = extinction_spectrum(single_emitter_response(e, grid));
  for (auto _ : state) benchmark::DoNotOptimize(fit_lorentzian(grid.values(), y, 1));
}
BENCHMARK(BM_LorentzianFit);

}  // namespace
BENCHMARK_MAIN();
