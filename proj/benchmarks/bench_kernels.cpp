// Microbenchmarks for the hot kernels: assembly, the localized QP solve,
// one Crank-Nicolson step, and Sobol point generation.

#include <benchmark/benchmark.h>

#include <numbers>

#include "msrb/assembly.hpp"
#include "msrb/basis.hpp"
#include "msrb/evolve.hpp"
#include "msrb/random_field.hpp"
#include "msrb/sampling.hpp"

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

msrb::KLPotential sect5_potential(const msrb::PeriodicGrid& grid) {
  return msrb::make_example_1d(msrb::PotentialKind::Sect5Multiscale, grid, 1.0,
                               0.0, 3, {1.0 / 9, 1.0 / 13, 1.0 / 11});
}

void bench_assemble_v(benchmark::State& state) {
  const auto grid = msrb::PeriodicGrid::line(-std::numbers::pi, kTwoPi,
                                             int(state.range(0)));
  const auto pot = sect5_potential(grid);
  const msrb::Vec xi = msrb::Vec::Constant(3, 0.5);
  const auto samp = msrb::sample(pot, xi);
  for (auto _ : state) benchmark::DoNotOptimize(msrb::assemble_V(grid, samp));
}
BENCHMARK(bench_assemble_v)->Arg(1024)->Arg(2048);

void bench_snapshots(benchmark::State& state) {
  const auto fine = msrb::PeriodicGrid::line(-std::numbers::pi, kTwoPi, 512);
  const auto coarse = msrb::PeriodicGrid::line(-std::numbers::pi, kTwoPi,
                                               int(state.range(0)));
  msrb::CoarseFineMap map(coarse, fine);
  const auto pot = sect5_potential(fine);
  msrb::SamplePlan plan;
  plan.method = msrb::SampleMethod::Sobol;
  plan.n = 8;
  plan.m = 3;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        msrb::generate_snapshots(pot, plan, 1.0 / 16, map));
}
BENCHMARK(bench_snapshots)->Arg(32)->Arg(64);

void bench_cn_step(benchmark::State& state) {
  const auto grid = msrb::PeriodicGrid::line(-std::numbers::pi, kTwoPi,
                                             int(state.range(0)));
  const auto pot = sect5_potential(grid);
  const auto sys = msrb::GalerkinSystem::fine(grid, pot, 1.0 / 16);
  msrb::Vec psi(grid.node_count());
  for (msrb::Index i = 0; i < grid.node_count(); ++i)
    psi[i] = std::exp(-20.0 * grid.node_position(i)[0] * grid.node_position(i)[0]);
  msrb::WaveState s = sys.project_initial(psi);
  const msrb::Vec xi = msrb::Vec::Zero(3);
  msrb::CrankNicolson cn(sys, xi, 1e-3);
  for (auto _ : state) {
    s = cn.step(s);
    benchmark::DoNotOptimize(s.c.data());
  }
}
BENCHMARK(bench_cn_step)->Arg(1024)->Arg(2048);

void bench_sobol(benchmark::State& state) {
  msrb::SamplePlan plan;
  plan.method = msrb::SampleMethod::Sobol;
  plan.n = state.range(0);
  plan.m = 8;
  for (auto _ : state) benchmark::DoNotOptimize(msrb::generate(plan));
}
BENCHMARK(bench_sobol)->Arg(1024)->Arg(16384);

}  // namespace

BENCHMARK_MAIN();
