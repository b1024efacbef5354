#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "hybridjump/reference.hpp"
#include "hybridjump/simulate.hpp"
#include "hybridjump/weakerr.hpp"

using namespace hybridjump;

namespace {

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size()); }
double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

// gamma = g0 constant, c = 1, no flow: X_T counts accepted jumps.
JumpModel counting_model(double bound, double g0) {
  CoefficientSet c;
  c.dim = 1;
  c.rate_bound = bound;
  c.jump_amplitude = [](double, double, const Vec&) { return Vec{1.0}; };
  c.jump_rate = [g0](double, double, const Vec&) { return g0; };
  return JumpModel(c, MarkMeasure::discrete({{0.0, 1.2}, {1.0, 0.8}}), 1.5);
}

const Observable first = [](const Vec& x) { return x[0]; };

}  // namespace

TEST(Flow, FrozenWithoutCoefficients) {
  CoefficientSet c;
  c.dim = 2;
  const JumpModel m(c, MarkMeasure::discrete({{0.0, 1.0}}), 1.0);
  RngStream rng(1, 0);
  const Vec x{0.3, -1.2};
  EXPECT_EQ(flow_segment(m, x, 0.0, 1.0, 1e-3, rng), x);
}

TEST(Flow, LinearDecayMatchesExponential) {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [](double, const Vec& x) { return Vec{-x[0]}; };
  const JumpModel m(c, MarkMeasure::discrete({{0.0, 1.0}}), 1.0);
  RngStream rng(1, 0);
  const double x = 2.0;
  EXPECT_LT(std::abs(flow_segment(m, Vec{x}, 0.0, 1.0, 1e-3, rng)[0] - x * std::exp(-1.0)), 5e-3 * x);
}

TEST(Flow, BrownianVariance) {
  CoefficientSet c;
  c.dim = 1;
  c.diffusion = {[](double, const Vec&) { return Vec{1.0}; }};
  const JumpModel m(c, MarkMeasure::discrete({{0.0, 1.0}}), 1.0);
  std::vector<double> x(100000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    RngStream rng(5, i);
    x[i] = flow_segment(m, Vec{0.0}, 0.0, 0.7, 0.05, rng)[0];
  }
  const double se = 0.7 * std::sqrt(2.0 / double(x.size()));
  EXPECT_NEAR(variance(x), 0.7, 3 * se);
}

TEST(Fictive, ProposalCountMeanAndAcceptanceHalf) {
  const JumpModel m = counting_model(3.0, 3.0);  // gamma = Gamma
  SimConfig s;
  s.horizon = 1.5;
  s.record = true;
  double prop = 0.0, acc = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(9, i);
    const auto p = simulate_fictive(m, Region::all(), Vec{0.0}, 0.0, s, rng);
    prop += p.proposals;
    acc += p.accepted;
    double last = 0.0;
    for (const auto& e : p.events) {
      EXPECT_GT(e.time, last);
      EXPECT_LE(e.time, 1.5);
      EXPECT_EQ(e.accepted, e.uniform <= 3.0);
      last = e.time;
    }
  }
  EXPECT_NEAR(prop / n, 18.0, 3 * std::sqrt(18.0 / n));
  EXPECT_NEAR(acc / prop, 0.5, 0.01);
}

TEST(Fictive, ThinnedCountIsPoisson) {
  const double g0 = 1.2;
  const JumpModel m = counting_model(3.0, g0);
  SimConfig s;
  s.horizon = 1.5;
  s.paths = 100000;
  s.seed = 11;
  s.record = false;
  const auto x = terminal_samples(m, Region::all(), Vec{0.0}, first, s, 0);
  const double lambda = g0 * 2.0 * 1.5, n = double(x.size());
  EXPECT_NEAR(mean(x), lambda, 3 * std::sqrt(lambda / n));
  EXPECT_NEAR(variance(x), lambda, 3 * lambda * std::sqrt(2.0 / n + 1.0 / (lambda * n)));
}

TEST(Real, SentinelLeavesStateAndProposalsArePoisson) {
  const JumpModel m = discrete_toy({}, 1.5);
  SimConfig s;
  s.horizon = 1.5;
  s.representation = Representation::Real;
  std::vector<std::uint64_t> counts;
  for (int i = 0; i < 10000; ++i) {
    RngStream rng(13, i);
    const auto p = simulate_real(m, Region::all(), Vec{0.4}, 0.0, s, rng);
    counts.push_back(p.proposals);
    for (const auto& e : p.events)
      if (e.sentinel) EXPECT_EQ(e.before, e.after);
  }
  // 2 Gamma mu(E) T = 2 * 2 * 2 * 1.5
  EXPECT_GT(chi_square_poisson(counts, 12.0).p_value, 0.01);
}

TEST(Real, ConstantRateSentinelMassIsHalf) {
  DiscreteToy p;
  p.constant_rate = p.rate_bound;
  const auto k = real_shock_kernel(discrete_toy(p, 1.0), Region::all(), 0.0, Vec{0.7});
  EXPECT_NEAR(k.sentinel, 0.5, 1e-14);
}

TEST(Real, SameLawAsFictiveOnCountingModel) {
  const JumpModel m = counting_model(3.0, 1.2);
  SimConfig s;
  s.horizon = 1.5;
  s.paths = 10000;
  s.record = false;
  s.seed = 21;
  const auto a = terminal_samples(m, Region::all(), Vec{0.0}, first, s, 0);
  s.seed = 22;
  s.representation = Representation::Real;
  const auto b = terminal_samples(m, Region::all(), Vec{0.0}, first, s, 0);
  // Integer-valued: compare the count histograms.
  const double ma = mean(a), mb = mean(b);
  EXPECT_NEAR(ma, mb, 3 * std::sqrt((variance(a) + variance(b)) / 10000.0));
}

TEST(Thinning, InflatedBoundLeavesLawUnchanged) {
  // no flow: extra rejected proposals would otherwise shift the Euler grid
  DiscreteToy p;
  p.drift = 0.0;
  const JumpModel m = discrete_toy(p, 1.0);
  SimConfig s;
  s.horizon = 1.0;
  s.paths = 10000;
  s.record = false;
  s.seed = 31;
  const auto a = terminal_samples(m, Region::all(), Vec{0.2}, first, s, 0);
  s.seed = 32;
  s.dominating_bound = 5.0;
  const auto b = terminal_samples(m, Region::all(), Vec{0.2}, first, s, 0);
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(Hybrid, EmptyJumpRegionIsPureFlow) {
  DiscreteToy p;
  p.sigma = 0.4;
  const JumpModel m = discrete_toy(p, 1.0);
  SimConfig s;
  s.horizon = 1.0;
  s.step = 0.01;
  RngStream r1(3, 7), r2(3, 7);
  const auto path = simulate_hybrid(m, Region::indices({}), Vec{0.5}, 0.0, s, r1);
  EXPECT_EQ(path.proposals, 0u);
  EXPECT_EQ(path.terminal, flow_segment(m, Vec{0.5}, 0.0, 1.0, 0.01, r2));
}

TEST(Hybrid, WithoutFlowEqualsFictiveLaw) {
  DiscreteToy p;
  p.drift = 0.0;
  const JumpModel m = discrete_toy(p, 1.0);
  SimConfig s;
  s.horizon = 1.0;
  s.paths = 10000;
  s.record = false;
  s.seed = 41;
  const auto a = terminal_samples(m, Region::all(), Vec{0.2}, first, s, 0);
  s.seed = 42;
  s.representation = Representation::Hybrid;
  const auto b = terminal_samples(m, Region::all(), Vec{0.2}, first, s, 0);
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(TerminalSamples, DeterministicAcrossWorkers) {
  DiscreteToy p;
  p.sigma = 0.3;
  const JumpModel m = discrete_toy(p, 1.0);
  SimConfig s;
  s.horizon = 1.0;
  s.step = 0.01;
  s.paths = 2000;
  s.seed = 77;
  s.record = false;
  const auto a = terminal_samples(m, Region::all(), Vec{0.1}, first, s, 1);
  const auto b = terminal_samples(m, Region::all(), Vec{0.1}, first, s, 8);
  const auto c = terminal_samples_serial(m, Region::all(), Vec{0.1}, first, s);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  s.paths = 1;
  RngStream rng(77, 0);
  const auto one = terminal_samples(m, Region::all(), Vec{0.1}, first, s, 0);
  EXPECT_EQ(one[0], simulate(m, Region::all(), Vec{0.1}, 0.0, s, rng).terminal[0]);
  const auto ones = terminal_samples(m, Region::all(), Vec{0.1}, [](const Vec&) { return 1.0; }, s, 0);
  EXPECT_EQ(ones[0], 1.0);
}

TEST(Coupled, IdenticalRegionsHaveZeroGap) {
  const JumpModel m = discrete_toy({}, 1.0);
  SimConfig s;
  s.horizon = 1.0;
  s.paths = 200;
  s.seed = 3;
  const auto g = coupled_sup_gaps(m, Region::all(), Region::all(), Vec{0.0}, Vec{0.0}, s, 0);
  for (double v : g) EXPECT_EQ(v, 0.0);
}
