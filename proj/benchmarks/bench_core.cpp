#include <benchmark/benchmark.h>

#include <numbers>

#include "bjj/diagnostics.hpp"
#include "bjj/model.hpp"
#include "bjj/ode.hpp"
#include "bjj/stability.hpp"

using namespace bjj;

static void BM_rhs(benchmark::State& state) {
  const auto p = SystemParams::from_dimensionless(5.0, 0.02);
  const Drive d{0.7, 4.95};
  State s{0.5, 0.3};
  double t = 0.0;
  for (auto _ : state) {
    const Rates r = rhs(s, t, p, d);
    benchmark::DoNotOptimize(r);
    t += 1e-3;
  }
}
BENCHMARK(BM_rhs);

static void BM_simulate(benchmark::State& state) {
  const auto p = SystemParams::from_dimensionless(5.0, 0.02);
  const Drive d{0.7, 4.95};
  IntegratorSettings s;
  s.t_end = static_cast<double>(state.range(0));
  for (auto _ : state) {
    const Trajectory tr = simulate(p, d, State{0.5, 0.0}, s);
    benchmark::DoNotOptimize(tr.states.back());
  }
}
BENCHMARK(BM_simulate)->Arg(100)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_pole_crossing(benchmark::State& state) {
  const auto p = SystemParams::from_dimensionless(0.36, 0.02);
  const Drive d{0.37 * 2.3 * 2.3, 2.3};
  IntegratorSettings s;
  s.t_end = 1000.0;
  s.guard_delta = 1e-7;
  s.singularity_policy = SingularityPolicy::pole_crossing;
  for (auto _ : state) {
    const Trajectory tr = simulate(p, d, State{0.01, std::numbers::pi}, s);
    benchmark::DoNotOptimize(tr.pole_crossings.size());
  }
}
BENCHMARK(BM_pole_crossing)->Unit(benchmark::kMillisecond);

static void BM_scan_diagram(benchmark::State& state) {
  const slowflow::DiagramBase base{4.95, 0.12, 0.02};
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const auto d = slowflow::scan_diagram({0.15, 0.35}, {0.0, 0.1}, n, n, base, 1);
    benchmark::DoNotOptimize(d.lambda_plus.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}
BENCHMARK(BM_scan_diagram)->Arg(50)->Arg(200);

static void BM_lyapunov(benchmark::State& state) {
  const auto p = SystemParams::from_dimensionless(0.36, 0.02);
  const Drive d{0.24 * 2.3 * 2.3, 2.3};
  diag::LyapunovSettings ls;
  ls.horizon = 500.0;
  ls.integrator.guard_delta = 1e-7;
  ls.integrator.singularity_policy = SingularityPolicy::pole_crossing;
  for (auto _ : state) {
    const auto est = diag::lyapunov_max(p, d, State{0.01, std::numbers::pi}, ls);
    benchmark::DoNotOptimize(est.lambda_max);
  }
}
BENCHMARK(BM_lyapunov)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
