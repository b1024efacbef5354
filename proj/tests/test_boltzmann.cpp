#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hybridjump/boltzmann.hpp"
#include "hybridjump/error.hpp"

using namespace hybridjump;

namespace {
constexpr double kHalfPi = 0.5 * std::numbers::pi;
}

TEST(Params, ExponentsAndConstraints) {
  const auto p = BoltzmannParams::first_order(0.3, 0.1, 0.2);
  EXPECT_NEAR(p.r, (2.0 - 0.9) / 3.1, 1e-15);
  EXPECT_NEAR(p.theoretical_exponent(), 1.1 * 1.1 / 3.1, 1e-15);
  EXPECT_NEAR(p.theoretical_exponent(), 0.3903, 1e-4);
  auto bad = p;
  bad.kappa = 0.2;
  EXPECT_THROW(bad.validate(), Error);
  auto q = BoltzmannParams::second_order(0.3, 0.05, 0.2);
  q.validate();
  EXPECT_LT(q.r, BoltzmannParams::second_order_r_max(0.3, 0.05));
  q.kappa = 0.1;
  EXPECT_THROW(q.validate(), Error);
}

TEST(Cutoff, GammaEps) {
  BoltzmannParams p = BoltzmannParams::first_order(0.3, 0.1, 0.1, 0.75);
  p.r = std::log(0.01) / std::log(p.delta);
  EXPECT_NEAR(p.epsilon(), 0.01, 1e-14);
  EXPECT_NEAR(p.gamma_eps(), std::pow(std::log(100.0), 0.75), 1e-14);
  EXPECT_NEAR(p.gamma_eps(), 3.1434, 5e-4);
}

TEST(Cutoff, RegionsAndBounds) {
  const double eps = 0.01, g = std::pow(std::log(100.0), 0.75);
  const CutoffFunction phi(eps, g);
  EXPECT_EQ(phi(eps / 2), 2 * eps);
  const double mid = (3 * eps + g - 1) / 2;
  EXPECT_NEAR(phi(mid), mid, 1e-12);
  EXPECT_EQ(phi(g + 2 * eps), g);
  for (double x = 0.0; x < g + 1.0; x += 0.001) {
    const double v = phi(x);
    EXPECT_GE(v, 2 * eps - 1e-15);
    EXPECT_LE(v, g + 1e-15);
  }
  // table against the direct quadrature inside both windows
  double worst = 0.0;
  for (double x = eps; x <= 3 * eps; x += eps / 97) worst = std::max(worst, std::abs(phi(x) - phi.exact(x)));
  for (double x = g - eps; x <= g + eps; x += eps / 97) worst = std::max(worst, std::abs(phi(x) - phi.exact(x)));
  EXPECT_LT(worst, 1e-8);
}

TEST(Cutoff, ConvolutionByIndependentQuadrature) {
  const double eps = 0.05, g = 1.5;
  const CutoffFunction phi(eps, g);
  const GaussLegendre gl(64);
  const double norm = bump_normalizer();
  for (double x : {0.06, 0.1, 0.14, 1.46, 1.5, 1.53}) {
    // int ((y v 2eps) ^ g) chi((x - y)/eps)/eps dy over y in (x - eps, x + eps), split at the kinks
    std::vector<double> cuts{x - eps, x + eps};
    for (double k : {2 * eps, g})
      if (k > x - eps && k < x + eps) cuts.push_back(k);
    std::sort(cuts.begin(), cuts.end());
    double v = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      v += gl.integrate(
          [&](double y) { return std::clamp(y, 2 * eps, g) * bump((x - y) / eps) / (eps * norm); }, cuts[i],
          cuts[i + 1]);
    EXPECT_NEAR(phi(x), v, 1e-8) << x;
  }
}

TEST(Theta, RegionMassAndMoments) {
  EXPECT_NEAR(theta_region_mass(0.5, 0.1, kHalfPi), 9.4576, 1e-4);
  const auto m = theta_moments(0.5, 0.1);
  EXPECT_NEAR(m.i1, -0.02108, 1e-5);
  // leading order -delta^{2-nu}/(2-nu)
  EXPECT_NEAR(m.i1 / (-std::pow(0.1, 1.5) / 1.5), 1.0, 0.01);
  EXPECT_GT(m.i2, 0.0);
  EXPECT_GT(m.i3, 0.0);
  EXPECT_LE(m.i2, m.i3);
  const auto big = theta_moments(0.5, kHalfPi);
  EXPECT_LE(big.i2, big.i3);
  const auto small = theta_moments(0.5, 0.01);
  EXPECT_LT(std::abs(small.i1), std::abs(m.i1));
  EXPECT_LT(small.i2, m.i2);
  EXPECT_LT(small.i3, m.i3);
}

TEST(Theta, SamplerHistogram) {
  const double nu = 0.3, lo = 0.1, hi = kHalfPi;
  RngStream rng(3, 0);
  const int cells = 20;
  std::vector<double> obs(cells, 0.0), prob(cells);
  const double total = theta_region_mass(nu, lo, hi);
  for (int k = 0; k < cells; ++k) {
    const double a = lo + (hi - lo) * k / cells, b = lo + (hi - lo) * (k + 1) / cells;
    prob[k] = theta_region_mass(nu, a, b) / total;
  }
  int neg = 0;
  for (int i = 0; i < 100000; ++i) {
    const double t = sample_theta(nu, lo, hi, rng);
    neg += t < 0;
    const int k = std::min(cells - 1, int((std::abs(t) - lo) / (hi - lo) * cells));
    obs[k] += 1.0;
  }
  EXPECT_GT(chi_square_cells(obs, prob).p_value, 0.01);
  EXPECT_NEAR(neg / 1e5, 0.5, 0.005);
  EXPECT_EQ(std::abs(sample_theta(nu, 0.3, 0.3, rng)), 0.3);
}

TEST(Collision, JumpValuesAndGeometry) {
  const Velocity v{1.0, 0.5}, w{-1.0, 0.5};
  const auto z = collision_jump(0.0, v, w);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_EQ(z[1], 0.0);
  const auto q = collision_jump(kHalfPi, v, w);
  EXPECT_NEAR(q[0], -1.0, 1e-15);
  EXPECT_NEAR(q[1], 1.0, 1e-15);
  RngStream r(1, 0);
  for (int i = 0; i < 100; ++i) {
    const Velocity a{r.normal(), r.normal()}, b{r.normal(), r.normal()};
    const double th = r.uniform(-kHalfPi, kHalfPi);
    const auto j = collision_jump(th, a, b);
    const double px = a[0] + j[0] - 0.5 * (a[0] + b[0]), py = a[1] + j[1] - 0.5 * (a[1] + b[1]);
    EXPECT_NEAR(std::hypot(px, py), 0.5 * std::hypot(a[0] - b[0], a[1] - b[1]), 1e-14);
  }
}

TEST(Deltas, DegenerateEnsembles) {
  const BoltzmannModel m(BoltzmannParams::first_order(0.3, 0.1, 0.2));
  const Velocity v{0.4, -0.3};
  const ParticleEnsemble self{v};
  const auto b = drift_delta(m, v, self);
  EXPECT_EQ(b[0], 0.0);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_EQ(diffusion_delta(m, v, self).a.frobenius(), 0.0);
  // symmetric pair: drift lies along v - w only
  const ParticleEnsemble pair{{v[0] - 1.0, v[1] - 2.0}, {v[0] - 1.0, v[1] - 2.0}};
  const auto bp = drift_delta(m, v, pair);
  EXPECT_NEAR(bp[0] * 2.0 - bp[1] * 1.0, 0.0, 1e-15);
  EXPECT_THROW((void)drift_delta(m, v, ParticleEnsemble{}), Error);
}

TEST(Deltas, TraceIdentityAndRoot) {
  const BoltzmannModel m(BoltzmannParams::first_order(0.3, 0.1, 0.01));
  const ParticleEnsemble e{{0.3, -1.1}, {-0.8, 0.4}, {1.6, 0.9}};
  const Velocity v{0.2, 0.1};
  const auto d = diffusion_delta(m, v, e);
  double s = 0.0;
  for (const auto& u : e) {
    const double w = std::hypot(v[0] - u[0], v[1] - u[1]);
    s += w * w * m.kernel().gamma(w);
  }
  const auto& mo = m.moments();
  EXPECT_NEAR(d.a.trace(), 0.25 * (mo.i2 + mo.i3) * s / 3.0, 1e-15);
  EXPECT_LT((d.root * d.root - d.a).frobenius(), 1e-14);
}

TEST(Kernel, HolderRatiosBounded) {
  const auto p = BoltzmannParams::first_order(0.3, 0.1, 0.01);
  RngStream r(5, 0);
  std::vector<double> xs, ys;
  for (int i = 0; i < 400; ++i) {
    xs.push_back(r.uniform(0.0, 3.0));
    ys.push_back(r.uniform(0.0, 3.0));
  }
  auto q = holder_ratios(p, 0.5, xs, ys);
  std::vector<double> s = q;
  std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
  const double med = s[s.size() / 2];
  for (double v : q) EXPECT_LE(v, 10.0 * med);
}

TEST(Particles, DeterministicAndCoupled) {
  const auto p = BoltzmannParams::first_order(0.3, 0.1, 0.2);
  const RngStream rng(4, 2);
  const auto a = simulate_cutoff(p, 50, 0.2, rng), b = simulate_cutoff(p, 50, 0.2, rng);
  EXPECT_EQ(a.final, b.final);
  const auto h = simulate_hybrid_order1(p, 50, 0.2, rng);
  EXPECT_EQ(h.initial, a.initial);
  EXPECT_EQ(a.times.front(), 0.0);
  EXPECT_NEAR(a.times.back(), 0.2, 1e-15);
}

TEST(Particles, AcceptanceNearHalfForConstantKernel) {
  const auto p = BoltzmannParams::first_order(0.3, 0.1, 0.4);
  const BoltzmannModel m(p);
  ASSERT_TRUE(m.kernel().constant());
  const auto t = simulate_cutoff(m, 400, 0.5, RngStream(1, 0));
  EXPECT_NEAR(double(t.accepted) / double(t.proposals), 0.5, 0.02);
}

TEST(Particles, FullAngleSplitIsNotAdmissible) {
  // delta >= 1 forces epsilon = delta^r >= 1 for any r > 0
  auto p = BoltzmannParams::first_order(0.3, 0.1, 0.4);
  p.delta = kHalfPi;
  EXPECT_THROW(p.validate(), Error);
  p.r = std::log(0.5) / std::log(p.delta);
  EXPECT_THROW(p.validate(), Error);
}

TEST(Particles, FourthMomentStaysBounded) {
  const auto p = BoltzmannParams::first_order(0.3, 0.1, 0.2);
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LT(simulate_cutoff(p, 300, 0.5, RngStream(s, 0)).fourth_moment_drift(), 2.0);
}

TEST(Experiment, ReplicaMeansParallelMatchesSerial) {
  const BoltzmannModel m(BoltzmannParams::first_order(0.3, 0.1, 0.2));
  BoltzmannExperimentConfig cfg;
  cfg.particles = 60;
  cfg.replicas = 12;
  cfg.horizon = 0.2;
  cfg.workers = 3;
  const auto a = replica_means(m, gaussian_bump(), cfg), b = replica_means_serial(m, gaussian_bump(), cfg);
  EXPECT_EQ(a.cutoff, b.cutoff);
  EXPECT_EQ(a.hybrid, b.hybrid);
}

TEST(Experiment, ConstantFunctionGivesZero) {
  BoltzmannExperimentConfig cfg;
  cfg.particles = 40;
  cfg.replicas = 10;
  cfg.horizon = 0.1;
  const auto rep = boltzmann_experiment({BoltzmannParams::first_order(0.3, 0.1, 0.4)}, constant_function(2.0), cfg);
  EXPECT_EQ(rep.rows[0].error.estimate, 0.0);
}

TEST(Generators, HybridMatchesCutoffForFullReplacementLimit) {
  // distance shrinks with delta for a fixed ensemble
  const ParticleEnsemble e{{0.3, -1.1}, {-0.8, 0.4}, {1.6, 0.9}, {0.0, 0.2}};
  const Grid grid = Grid::lattice(2, -1.0, 1.0, 3);
  double prev = INFINITY;
  for (double d : {0.4, 0.2, 0.1}) {
    const BoltzmannModel m(BoltzmannParams::first_order(0.3, 0.1, d));
    const double dist = generator_distance(cutoff_generator(m, e), hybrid_generator(m, e, 1), gaussian_bump(), grid, 2);
    EXPECT_LT(dist, prev);
    prev = dist;
  }
}
