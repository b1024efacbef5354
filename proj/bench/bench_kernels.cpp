// Serial reference vs OpenMP for the three parallel kernels.
// The arg is the worker count; 0 selects the serial reference.
#include <benchmark/benchmark.h>

#include "hybridjump/boltzmann.hpp"
#include "hybridjump/generator.hpp"
#include "hybridjump/reference.hpp"
#include "hybridjump/simulate.hpp"

using namespace hybridjump;

static void BM_TerminalSamples(benchmark::State& st) {
  DiscreteToy p;
  p.sigma = 0.3;
  const JumpModel m = discrete_toy(p, 1.0);
  SimConfig s;
  s.horizon = 1.0;
  s.step = 0.01;
  s.paths = 4000;
  s.seed = 1;
  s.record = false;
  const Observable f = [](const Vec& x) { return x[0]; };
  const int w = int(st.range(0));
  for (auto _ : st) {
    auto v = w == 0 ? terminal_samples_serial(m, Region::all(), Vec{0.1}, f, s)
                    : terminal_samples(m, Region::all(), Vec{0.1}, f, s, w);
    benchmark::DoNotOptimize(v.data());
  }
  st.SetItemsProcessed(st.iterations() * s.paths);
}

static void BM_ReplicaMeans(benchmark::State& st) {
  const BoltzmannModel m(BoltzmannParams::first_order(0.3, 0.1, 0.2));
  BoltzmannExperimentConfig cfg;
  cfg.particles = 100;
  cfg.replicas = 16;
  cfg.horizon = 0.2;
  cfg.workers = int(st.range(0));
  const auto f = gaussian_bump();
  for (auto _ : st) {
    auto r = cfg.workers == 0 ? replica_means_serial(m, f, cfg) : replica_means(m, f, cfg);
    benchmark::DoNotOptimize(r.cutoff.data());
  }
  st.SetItemsProcessed(st.iterations() * cfg.replicas);
}

static void BM_GeneratorDistance(benchmark::State& st) {
  DiscreteToy p2;
  p2.amplitude = 0.6;
  const auto a = generator_of(discrete_toy({}, 1.0)), b = generator_of(discrete_toy(p2, 1.0));
  const Grid grid = Grid::lattice(1, -3.0, 3.0, 201, {0.0, 0.25, 0.5, 0.75});
  const auto f = sine_function();
  const int w = int(st.range(0));
  for (auto _ : st) {
    double d = w == 0 ? generator_distance_serial(a, b, f, grid, 1) : generator_distance(a, b, f, grid, 1, w);
    benchmark::DoNotOptimize(d);
  }
}

BENCHMARK(BM_TerminalSamples)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicaMeans)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GeneratorDistance)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
