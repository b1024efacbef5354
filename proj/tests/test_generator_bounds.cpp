#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hybridjump/bounds.hpp"
#include "hybridjump/derivatives.hpp"
#include "hybridjump/generator.hpp"
#include "hybridjump/reference.hpp"
#include "hybridjump/regimes.hpp"
#include "hybridjump/simulate.hpp"
#include "hybridjump/weakerr.hpp"

using namespace hybridjump;

TEST(TestFunctions, DerivativesMatchFiniteDifferences) {
  const double h = 1e-4;
  for (const auto& f : {sine_function(), cosine_function(), gaussian_bump(), quadratic_function()}) {
    for (const Vec x : {Vec{0.3, -0.7}, Vec{1.1, 0.2}}) {
      const Vec g = f.gradient(x);
      const Mat H = f.hessian(x);
      for (std::size_t i = 0; i < 2; ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        EXPECT_NEAR(g[i], (f(xp) - f(xm)) / (2 * h), 10 * h * h) << f.name;
        const Vec gp = f.gradient(xp), gm = f.gradient(xm);
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(H(j, i), (gp[j] - gm[j]) / (2 * h), 10 * h * h) << f.name;
      }
    }
  }
}

TEST(TestFunctions, BumpNormBoundsDominate) {
  const auto f = gaussian_bump();
  double s1 = 0.0, s2 = 0.0;
  for (double x = -4.0; x <= 4.0; x += 1e-3) {
    s1 = std::max(s1, std::abs(f.gradient(Vec{x})[0]));
    s2 = std::max(s2, std::abs(f.hessian(Vec{x})(0, 0)));
  }
  EXPECT_NEAR(s1, std::sqrt(2.0 / std::exp(1.0)), 1e-6);
  EXPECT_NEAR(s2, 2.0, 1e-12);
  EXPECT_GE(f.norm_bound[1], 1.0 + s1 - 1e-12);
  EXPECT_GE(f.norm_bound[2], 1.0 + s1 + s2 - 1e-12);
}

TEST(WeightedNorm, Values) {
  EXPECT_EQ(WeightedNorm{0}(Vec{3.0}), 1.0);
  EXPECT_EQ(WeightedNorm{2}(Vec{0.0, 0.0}), 1.0);
  EXPECT_NEAR(WeightedNorm{2}(Vec{1.0, 2.0}), 6.0, 1e-14);
}

TEST(Generator, AffineWithoutJumps) {
  CoefficientSet c;
  c.dim = 2;
  c.drift = [](double t, const Vec& x) { return Vec{x[1] + t, -2.0 * x[0]}; };
  c.diffusion = {[](double, const Vec&) { return Vec{1.0, 0.5}; }};
  const JumpModel m(c, MarkMeasure::discrete({{0.0, 1.0}}), 1.0);
  const auto f = affine_function(Vec{1.5, -0.5}, 2.0);
  const Vec x{0.4, -1.0};
  EXPECT_NEAR(apply_generator(m, f, 0.3, x), 1.5 * (-1.0 + 0.3) - 0.5 * (-0.8), 1e-14);
}

TEST(Generator, QuadraticWithCovariance) {
  CoefficientSet c;
  c.dim = 1;
  c.covariance = [](double, const Vec&) { return Mat::identity(1) * 2.0; };
  const JumpModel m(c, MarkMeasure::discrete({{0.0, 1.0}}), 1.0);
  // 1/2 * a * f'' = 1/2 * 2 * 2
  EXPECT_NEAR(apply_generator(m, quadratic_function(), 0.0, Vec{0.7}), 2.0, 1e-14);
}

TEST(Generator, ThreeRegimeLimitClosedForm) {
  const auto ex = ThreeRegimeExample::standard(0.01);
  const JumpModel lim = ex.limit(1.0);
  const auto f = sine_function();
  for (double x : {-1.0, 0.0, 0.8}) {
    const double c = ex.c(x), g = ex.gamma(x);
    // 1/2 beta1^2 c^2 g (-sin x) + beta2 c g cos x + g int_0^1 (sin(x + c sqrt z) - sin x) dz / z
    GeneratorOptions opt;
    const double jump = g * integrate(
                                [&](double z) {
                                  const double u = c * std::sqrt(z);
                                  // sin(x+u) - sin x = 2 cos(x + u/2) sin(u/2)
                                  return 2.0 * std::cos(x + 0.5 * u) * std::sin(0.5 * u) / z;
                                },
                                0.0, 1.0);
    const double want = -0.5 * ThreeRegimeExample::beta1_squared() * c * c * g * std::sin(x) +
                        ThreeRegimeExample::beta2() * c * g * std::cos(x) + jump;
    EXPECT_NEAR(apply_generator(lim, f, 0.0, Vec{x}, opt), want, 1e-6) << x;
  }
}

TEST(Generator, DynkinConsistency) {
  DiscreteToy p;
  p.drift = 0.0;
  const JumpModel m = discrete_toy(p, 1.0);
  const auto f = sine_function();
  const double h = 0.01, x = 0.4;
  SimConfig s;
  s.horizon = h;
  s.paths = 200000;
  s.seed = 17;
  s.record = false;
  const auto y = terminal_samples(m, Region::all(), Vec{x}, [&](const Vec& v) { return f(v) - f(Vec{x}); }, s, 0);
  double mean = 0.0, sq = 0.0;
  for (double v : y) {
    mean += v;
    sq += v * v;
  }
  mean /= double(y.size());
  const double se = std::sqrt((sq / double(y.size()) - mean * mean) / double(y.size())) / h;
  const double lf = apply_generator(m, f, 0.0, Vec{x});
  // O(h) bias: h * |L^2 f| / 2 with |L^2 f| <= (2 Gamma mu)^2 * 2 = 128
  EXPECT_NEAR(mean / h, lf, 3 * se + 0.5 * h * 128.0);
}

TEST(GeneratorDistance, ZeroSymmetricTriangle) {
  const Grid grid = Grid::lattice(1, -2.0, 2.0, 9, {0.0, 0.5});
  const auto f = sine_function();
  DiscreteToy p1, p2, p3;
  p2.amplitude = 0.6;
  p3.drift = -0.2;
  const auto a = discrete_toy(p1, 1.0), b = discrete_toy(p2, 1.0), c = discrete_toy(p3, 1.0);
  EXPECT_EQ(generator_distance(a, a, f, grid, 1), 0.0);
  const double ab = generator_distance(a, b, f, grid, 1), ba = generator_distance(b, a, f, grid, 1);
  EXPECT_EQ(ab, ba);
  EXPECT_LE(generator_distance(a, c, f, grid, 1), ab + generator_distance(b, c, f, grid, 1) + 1e-15);
  EXPECT_EQ(generator_distance(generator_of(a), generator_of(b), f, grid, 1, 3),
            generator_distance_serial(generator_of(a), generator_of(b), f, grid, 1));
}

TEST(GeneratorDistance, ThreeRegimeRate) {
  const Grid grid = Grid::lattice(1, -2.0, 2.0, 9);
  const auto f = sine_function();
  const std::vector<double> eps{0.02, 0.01, 0.005};
  std::vector<double> d;
  for (double e : eps) {
    const auto ex = ThreeRegimeExample::standard(e);
    const auto src = ex.source(1.0);
    d.push_back(generator_distance(src, ex.limit(1.0), f, grid, 0));
  }
  const double slope = fit_rate(eps, d).slope;
  EXPECT_GE(slope, 0.4);
  EXPECT_LE(slope, 0.65);
}

TEST(Derivatives, FiniteDifferencesOnDrift) {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [](double, const Vec& x) { return Vec{std::sin(x[0])}; };
  const CoefficientDerivatives d(c);
  for (double x : {-1.0, 0.3}) {
    EXPECT_NEAR(d.drift({0}, 0.0, Vec{x})[0], std::cos(x), 1e-8);
    EXPECT_NEAR(d.drift({0, 0}, 0.0, Vec{x})[0], -std::sin(x), 1e-5);
  }
  EXPECT_EQ(multi_indices(2, 2).size(), 4u);
}

TEST(Derivatives, MissingWithoutFallback) {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [](double, const Vec& x) { return x; };
  c.finite_difference_fallback = false;
  const CoefficientDerivatives d(c);
  try {
    (void)d.drift({0}, 0.0, Vec{0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDerivative);
  }
}

TEST(Regularity, ConstantRateHasNoLogGammaTerms) {
  DiscreteToy p;
  p.constant_rate = 1.5;
  const JumpModel m = discrete_toy(p, 1.0);
  RegularityOptions o;
  o.q = 2;
  const auto r = regularity_report(m, Region::all(), Grid::lattice(1, -2.0, 2.0, 9), o);
  EXPECT_EQ(r.gamma_functional, 0.0);
  for (const auto& t : r.log_gamma_partials)
    for (double v : t.abs_norm) EXPECT_EQ(v, 0.0);
}

TEST(Regularity, LinearAmplitudeTheta) {
  CoefficientSet c;
  c.dim = 1;
  c.rate_bound = 2.0;
  c.drift = [](double, const Vec& x) { return Vec{-0.5 * x[0]}; };
  c.diffusion = {[](double, const Vec& x) { return Vec{0.3 * x[0]}; }};
  c.jump_amplitude = [](double, double z, const Vec& x) { return Vec{z * x[0]}; };
  c.jump_rate = [](double, double, const Vec&) { return 1.0; };
  const JumpModel m(c, MarkMeasure::discrete({{0.5, 1.0}, {-1.0, 0.5}}), 1.0);
  RegularityOptions o;
  o.q = 2;
  const auto r = regularity_report(m, Region::all(), Grid::lattice(1, -1.0, 1.0, 5), o);
  // second derivatives of c vanish: theta = 1 + ||sigma||_{2,q} + ||b||_{2,q}
  EXPECT_NEAR(r.theta, 1.0 + r.sigma_2q + r.drift_2q, 1e-6);
}

TEST(Regularity, MonotoneInPAndQ) {
  const auto ex = ThreeRegimeExample::standard(0.01);
  const JumpModel m = ex.source(1.0);
  RegularityOptions o;
  o.q = 2;
  const auto r = regularity_report(m, Region::all(), Grid::lattice(1, -1.0, 1.0, 5), o);
  EXPECT_LE(r.theta_at(1, 2), r.theta_at(2, 2));
  EXPECT_LE(r.theta_at(2, 2), r.theta_at(2, 8));
  EXPECT_LE(r.a_at(2), r.a_at(8));
  EXPECT_TRUE(std::isfinite(r.log_Q));
}

TEST(Regularity, RecompositionAndDeterminism) {
  const auto ex = ThreeRegimeExample::standard(0.01);
  const JumpModel m = ex.source(1.0);
  RegularityOptions o;
  o.q = 3;
  o.workers = 1;
  const Grid grid = Grid::lattice(1, -1.0, 1.0, 5);
  const auto r = regularity_report(m, Region::all(), grid, o);
  o.workers = 4;
  const auto r2 = regularity_report(m, Region::all(), grid, o);
  EXPECT_EQ(r.to_json().dump(), r2.to_json().dump());
  const int q = 3;
  // spreadsheet-style recomputation from the logged tables
  double brackets = 0.0;
  for (const auto& t : r.log_gamma_partials) brackets += t.bracket(4 * q);
  EXPECT_NEAR(brackets, r.log_gamma_bracket_sum, 1e-12 * std::max(1.0, brackets));
  const double laq = log_alpha_from(1.0, q, 1.0, r.theta_at(q, 4 * q * q), r.a_at(4 * q * q));
  EXPECT_EQ(laq, r.log_alpha_q);
  const double lq = log_Q_from(1.0, q, 1.0, laq, r.gamma_functional, brackets);
  EXPECT_NEAR(lq / r.log_Q, 1.0, 1e-9);
}

TEST(Localization, Reductions) {
  const JumpModel m = discrete_toy({}, 1.0);
  const Grid grid = Grid::lattice(1, -2.0, 2.0, 5);
  const auto same = localization_bound(m, Region::all(), Region::all(), 1.0, 1.0, 0.5, grid);
  EXPECT_EQ(same.alpha_difference, 0.0);
  EXPECT_NEAR(same.value, 0.5 * std::exp(1.0 * same.gradient_sum() * same.gradient_sum() + 1.0), 1e-12);
  EXPECT_NEAR(calibrate_universal_constant(same, same.at(0.3)), 0.3, 1e-12);
}

TEST(Localization, ThreeRegimeDecreases) {
  const auto ex = ThreeRegimeExample::standard(0.02);
  const JumpModel m = ex.limit_truncated(1.0, 1e-6);
  const Region g2 = ex.limit_truncated_region(1e-6);
  const Grid grid = Grid::lattice(1, -2.0, 2.0, 5);
  double prev = INFINITY;
  for (double e : {0.02, 0.01, 0.005}) {
    const auto b = localization_bound(m, Region::interval(4 * e, 1.0), g2, 1.0, 1.0, 0.0, grid);
    // alpha over (1e-6, 4e] at x = 0: c gamma * 2 (sqrt(4e) - 1e-3)
    EXPECT_NEAR(b.alpha_difference, 1.5 * 2.0 * (std::sqrt(4 * e) - 1e-3), 1e-8);
    EXPECT_LT(b.value, prev);
    prev = b.value;
  }
}
