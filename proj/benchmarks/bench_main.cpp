// Microbenchmarks for the hot paths: coefficient evaluation, switching-rate
// rows, path integration, mark sampling, and the coupling step.

#include <benchmark/benchmark.h>

#include "hybridsde/coupling.hpp"
#include "hybridsde/diagnostics.hpp"
#include "hybridsde/integrator.hpp"
#include "hybridsde/model.hpp"
#include "hybridsde/resolvent.hpp"

using namespace hybridsde;

namespace {

const ModelSpec& reference_model() {
  static const ModelSpec m = example1_model(0.5, 8);
  return m;
}

void BM_QRow(benchmark::State& state) {
  const ModelSpec& m = reference_model();
  const Vec x{0.6, -0.3, 0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(q_row(m, x, 3));
  }
}
BENCHMARK(BM_QRow);

void BM_DriftDiffusion(benchmark::State& state) {
  const ModelSpec& m = reference_model();
  const Vec x{0.6, -0.3, 0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.drift(x, 2));
    benchmark::DoNotOptimize(m.diffusion(x, 2));
  }
}
BENCHMARK(BM_DriftDiffusion);

void BM_SampleMark(benchmark::State& state) {
  const ModelSpec& m = reference_model();
  RngStream rng = RngStream::derive(1, 0, StreamRole::Jump);
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.levy.sample_mark(rng));
  }
}
BENCHMARK(BM_SampleMark);

void BM_Phi(benchmark::State& state) {
  const Vec x{0.6, -0.3, 0.7};
  const auto zeta = [](double) { return 1.0; };
  for (auto _ : state) {
    benchmark::DoNotOptimize(phi(x, zeta));
  }
}
BENCHMARK(BM_Phi);

void BM_SimulateHybrid(benchmark::State& state) {
  const ModelSpec& m = reference_model();
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = static_cast<double>(state.range(0)) / 1000.0;
  cfg.master_seed = 5;
  const Vec x0{0.5, 0.5, 0.5};
  std::uint64_t id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_hybrid(m, x0, 1, cfg, id++));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(cfg.horizon / cfg.dt));
}
BENCHMARK(BM_SimulateHybrid)->Arg(100)->Arg(1000);

void BM_CouplePaths(benchmark::State& state) {
  const ModelSpec& m = reference_model();
  CouplingConfig cfg;
  cfg.base.dt = 1e-3;
  cfg.base.horizon = 0.1;
  cfg.base.master_seed = 6;
  const Vec x0{0.4, 0.4, 0.4};
  const Vec z0{0.5, 0.4, 0.4};
  std::uint64_t id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(couple_paths(m, x0, z0, 1, cfg, id++));
  }
}
BENCHMARK(BM_CouplePaths);

void BM_KilledWeight(benchmark::State& state) {
  const ModelSpec& m = reference_model();
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 0.1;
  cfg.master_seed = 7;
  const Vec x0{0.5, 0.5, 0.5};
  std::uint64_t id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_killed(m, x0, 1, cfg.horizon, cfg, id++, KillVariant::Weight));
  }
}
BENCHMARK(BM_KilledWeight);

void BM_ApplyGenerator(benchmark::State& state) {
  const ModelSpec& m = reference_model();
  TestFunction f;
  f.value = [](std::span<const double> x, int k) {
    return std::sin(x[0]) * std::cos(x[1]) + 0.1 * k;
  };
  const Vec x{0.6, -0.3, 0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_generator(m, f, x, 2));
  }
}
BENCHMARK(BM_ApplyGenerator);

}  // namespace

BENCHMARK_MAIN();
