#include "hybridjump/regimes.hpp"

#include <algorithm>
#include <cmath>

#include "hybridjump/error.hpp"

namespace hybridjump {

void RegimeSplit::check(const MarkMeasure& mu) const {
  const Region ra = mu.resolve(a), rb = mu.resolve(b), rc = mu.resolve(c);
  for (const auto& [x, y] : {std::pair{ra, rb}, std::pair{ra, rc}, std::pair{rb, rc}})
    if (!x.intersect(y).is_empty() && mu.mass(x.intersect(y)) > 0.0)
      throw Error(ErrorCode::InvalidArgument, "regime regions overlap");
  const Region covered = ra.unite(rb).unite(rc);
  const Region missing = mu.support().difference(covered);
  if (!missing.is_empty() && mu.mass(missing) > 0.0)
    throw Error(ErrorCode::InvalidArgument, "regime regions do not cover the support");
  const double total = mu.total_mass();
  if (std::isfinite(total)) {
    const double sum = mu.mass(ra) + mu.mass(rb) + mu.mass(rc);
    if (std::abs(sum - total) > 1e-12 * total)
      throw Error(ErrorCode::InvalidArgument, "regime masses do not add up to mu(E)");
  }
}

Mat regime_covariance(const JumpModel& src, const Region& a, double t, const Vec& x, const QuadratureOptions& quad) {
  const std::size_t d = src.dim();
  Mat out(d);
  if (a.is_empty()) return out;
  const auto& coef = src.coefficients();
  auto v = src.measure().integrate_many(
      [&](double z, std::span<double> o) {
        const Vec cz = coef.c(t, z, x);
        const double g = coef.gamma(t, z, x);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) o[i * d + j] = cz[i] * cz[j] * g;
      },
      d * d, a, quad);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = v[i * d + j];
  return out;
}

Vec regime_drift(const JumpModel& src, const Region& b, double t, const Vec& x, const QuadratureOptions& quad) {
  const std::size_t d = src.dim();
  Vec out(d);
  if (b.is_empty()) return out;
  const auto& coef = src.coefficients();
  auto v = src.measure().integrate_many(
      [&](double z, std::span<double> o) {
        const Vec cz = coef.c(t, z, x);
        const double g = coef.gamma(t, z, x);
        for (std::size_t i = 0; i < d; ++i) o[i] = cz[i] * g;
      },
      d, b, quad);
  for (std::size_t i = 0; i < d; ++i) out[i] = v[i];
  return out;
}

JumpModel build_hybrid(const JumpModel& source, const RegimeSplit& split, const QuadratureOptions& quad) {
  split.check(source.measure());
  const MarkMeasure& mu = source.measure();
  const Region a = mu.resolve(split.a), b = mu.resolve(split.b), c = mu.resolve(split.c);
  CoefficientSet coef = source.coefficients();
  if (!b.is_empty()) {
    const CoefficientSet base = source.coefficients();
    coef.drift = [source, base, b, quad](double t, const Vec& x) {
      return base.b(t, x) + regime_drift(source, b, t, x, quad);
    };
  }
  if (!a.is_empty()) {
    const CoefficientSet base = source.coefficients();
    coef.covariance = [source, base, a, quad](double t, const Vec& x) {
      Mat m = regime_covariance(source, a, t, x, quad);
      if (base.has_diffusion()) m += base.a(t, x);
      return m;
    };
    coef.diffusion.clear();
    coef.derivatives.reset();
  }
  return JumpModel(std::move(coef), mu.restricted(c), source.horizon());
}

namespace {

// Masses of mu_src and mu_lim on C and on a partition of it must agree.
void check_h2(const MarkMeasure& src, const MarkMeasure& lim, const Region& c) {
  std::vector<Region> cells;
  if (c.kind() == Region::Kind::Indices) {
    for (auto i : c.index_set()) cells.push_back(Region::indices({i}));
  } else {
    for (const auto& iv : c.parts()) {
      const double lo = iv.lo, hi = iv.hi;
      const bool geo = lo > 0.0 && hi / lo > 4.0;
      for (int k = 0; k < 8; ++k) {
        auto at = [&](int j) { return geo ? lo * std::pow(hi / lo, j / 8.0) : lo + (hi - lo) * j / 8.0; };
        cells.push_back(Region::interval(at(k), k == 7 ? hi : at(k + 1)));
      }
    }
  }
  cells.push_back(c);
  for (const auto& r : cells) {
    const double ms = src.mass(r), ml = lim.mass(r);
    if (std::isinf(ms) && std::isinf(ml)) continue;
    if (!(std::abs(ms - ml) <= 1e-10 * std::max({1.0, std::abs(ms), std::abs(ml)})))
      throw Error(ErrorCode::RegionMeasureMismatch, "source and limit measures differ on " + r.describe());
  }
}

}  // namespace

DeltaReport delta_functionals(const JumpModel& source, const JumpModel& limit, const RegimeSplit& split,
                              const Grid& grid, const QuadratureOptions& quad) {
  if (grid.times.empty() || grid.states.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  const MarkMeasure& ms = source.measure();
  const MarkMeasure& ml = limit.measure();
  const Region a = ms.resolve(split.a), b = ms.resolve(split.b), c = ms.resolve(split.c);
  if (!c.is_empty()) check_h2(ms, ml, c);
  const Region outside_c = ml.support().difference(c);
  const auto& cs = source.coefficients();
  const auto& cl = limit.coefficients();

  DeltaReport r;
  for (double t : grid.times) {
    for (const auto& x : grid.states) {
      Mat as = regime_covariance(source, a, t, x, quad);
      if (cs.has_diffusion()) as += cs.a(t, x);
      const Mat al = cl.has_diffusion() ? cl.a(t, x) : Mat(x.size());
      r.sigma = std::max(r.sigma, (as - al).frobenius());

      const Vec bs = cs.b(t, x) + regime_drift(source, b, t, x, quad);
      r.drift = std::max(r.drift, (bs - cl.b(t, x)).norm());

      if (!c.is_empty())
        r.amplitude_rate = std::max(
            r.amplitude_rate, ml.integrate(
                                  [&](double z) {
                                    const double gl = cl.gamma(t, z, x);
                                    return (cl.c(t, z, x) - cs.c(t, z, x)).norm() * gl +
                                           std::abs(gl - cs.gamma(t, z, x));
                                  },
                                  c, quad));
      if (!a.is_empty())
        r.a = std::max(r.a, ms.integrate(
                                [&](double z) {
                                  const double n = cs.c(t, z, x).norm();
                                  return n * n * n * cs.gamma(t, z, x);
                                },
                                a, quad));
      if (!b.is_empty())
        r.b = std::max(r.b, ms.integrate(
                                [&](double z) {
                                  const double n = cs.c(t, z, x).norm();
                                  return n * n * cs.gamma(t, z, x);
                                },
                                b, quad));
      if (!outside_c.is_empty())
        r.c = std::max(r.c, ml.integrate([&](double z) { return cl.c(t, z, x).norm() * cl.gamma(t, z, x); },
                                         outside_c, quad));
    }
  }
  return r;
}

// ---- the explicit example -------------------------------------------------

double ThreeRegimeExample::alpha() {
  return (std::sqrt(3.0) - std::sqrt(2.0)) / (std::sqrt(6.0) - std::sqrt(3.0));
}
double ThreeRegimeExample::beta1_squared() {
  const double a = alpha();
  return (a * a - 1.0) * std::log(2.0) + std::log(3.0);
}
double ThreeRegimeExample::beta1() { return std::sqrt(beta1_squared()); }
double ThreeRegimeExample::beta2() { return std::log(4.0 / 3.0); }

ThreeRegimeExample::ThreeRegimeExample(double epsilon, Smooth3 c, Smooth3 gamma, Smooth3 log_gamma,
                                       double rate_bound)
    : eps_(epsilon), c_(std::move(c)), gamma_(std::move(gamma)), log_gamma_(std::move(log_gamma)),
      gamma_bound_(rate_bound) {
  if (!(epsilon > 0.0) || !(4.0 * epsilon < 1.0))
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1/4)");
}

ThreeRegimeExample ThreeRegimeExample::at(double epsilon) const {
  ThreeRegimeExample e = *this;
  if (!(epsilon > 0.0) || !(4.0 * epsilon < 1.0))
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1/4)");
  e.eps_ = epsilon;
  return e;
}

ThreeRegimeExample ThreeRegimeExample::standard(double epsilon) {
  Smooth3 c{[](double x) { return 1.0 / (1.0 + x * x); },
            {[](double x) { const double u = 1.0 + x * x; return -2.0 * x / (u * u); },
             [](double x) { const double u = 1.0 + x * x; return (6.0 * x * x - 2.0) / (u * u * u); },
             [](double x) { const double u = 1.0 + x * x; return 24.0 * x * (1.0 - x * x) / (u * u * u * u); }}};
  auto g0 = [](double x) { return 0.5 * std::exp(-x * x); };
  Smooth3 gamma{[g0](double x) { return 1.0 + g0(x); },
                {[g0](double x) { return -2.0 * x * g0(x); },
                 [g0](double x) { return (4.0 * x * x - 2.0) * g0(x); },
                 [g0](double x) { return (12.0 * x - 8.0 * x * x * x) * g0(x); }}};
  Smooth3 lg{[gamma](double x) { return std::log(gamma.f(x)); },
             {[gamma](double x) { return gamma.d[0](x) / gamma.f(x); },
              [gamma](double x) {
                const double g = gamma.f(x), r = gamma.d[0](x) / g;
                return gamma.d[1](x) / g - r * r;
              },
              [gamma](double x) {
                const double g = gamma.f(x), r1 = gamma.d[0](x) / g, r2 = gamma.d[1](x) / g;
                return gamma.d[2](x) / g - 3.0 * r1 * r2 + 2.0 * r1 * r1 * r1;
              }}};
  return ThreeRegimeExample(epsilon, c, gamma, lg, 1.5);
}

MarkMeasure ThreeRegimeExample::source_measure() const {
  const double e = eps_;
  return MarkMeasure::density({{e, 2 * e, 1.0, -2.0}, {2 * e, 3 * e, 1.0, -2.0}, {3 * e, 4 * e, 1.0, -1.5},
                               {4 * e, 1.0, 1.0, -1.0}});
}

MarkMeasure ThreeRegimeExample::limit_measure() const { return MarkMeasure::density({{0.0, 1.0, 1.0, -1.0}}); }

RegimeSplit ThreeRegimeExample::split() const {
  return {Region::interval(0.0, 3 * eps_), Region::interval(3 * eps_, 4 * eps_), Region::interval(4 * eps_, 1.0)};
}

double ThreeRegimeExample::total_mass_closed_form() const {
  const double e = eps_;
  return 2.0 / (3.0 * e) + 2.0 * (1.0 / std::sqrt(3.0 * e) - 1.0 / std::sqrt(4.0 * e)) + std::log(1.0 / (4.0 * e));
}

double ThreeRegimeExample::shape(double z) const {
  if (z > 2 * eps_ && z <= 1.0) return std::sqrt(z);
  if (z > eps_ && z <= 2 * eps_) return -alpha() * std::sqrt(z);
  return 0.0;
}

double ThreeRegimeExample::amplitude(double z, double x) const { return c_.f(x) * shape(z); }

namespace {

double derivative(const Smooth3& s, const MultiIndex& a, double x) {
  if (a.empty()) return s.f(x);
  if (a.size() > 3) throw Error(ErrorCode::MissingDerivative, "example oracles stop at order 3");
  return s.d[a.size() - 1](x);
}

}  // namespace

JumpModel ThreeRegimeExample::source(double horizon) const {
  const ThreeRegimeExample self = *this;
  CoefficientSet cs;
  cs.dim = 1;
  cs.jump_amplitude = [self](double, double z, const Vec& x) { return Vec{self.amplitude(z, x[0])}; };
  cs.jump_rate = [self](double, double, const Vec& x) { return self.gamma_.f(x[0]); };
  cs.rate_bound = gamma_bound_;
  DerivativeOracles d;
  d.max_order = 3;
  d.jump_amplitude = [self](const MultiIndex& a, double, double z, const Vec& x) {
    return Vec{self.shape(z) * derivative(self.c_, a, x[0])};
  };
  d.log_rate = [self](const MultiIndex& a, double, double, const Vec& x) {
    return derivative(self.log_gamma_, a, x[0]);
  };
  cs.derivatives = d;
  return JumpModel(cs, source_measure(), horizon);
}

JumpModel ThreeRegimeExample::limit(double horizon) const { return limit_truncated(horizon, 0.0); }

JumpModel ThreeRegimeExample::limit_truncated(double horizon, double floor) const {
  if (!(floor >= 0.0 && floor < 1.0)) throw Error(ErrorCode::InvalidArgument, "floor must lie in [0, 1)");
  const ThreeRegimeExample self = *this;
  const double var = beta1_squared() + floor;
  const double drift = beta2() + 2.0 * std::sqrt(floor);
  CoefficientSet cs;
  cs.dim = 1;
  cs.drift = [self, drift](double, const Vec& x) { return Vec{drift * self.c_.f(x[0]) * self.gamma_.f(x[0])}; };
  cs.diffusion = {[self, var](double, const Vec& x) {
    return Vec{std::sqrt(var) * self.c_.f(x[0]) * std::sqrt(self.gamma_.f(x[0]))};
  }};
  cs.jump_amplitude = [self](double, double z, const Vec& x) { return Vec{self.c_.f(x[0]) * std::sqrt(z)}; };
  cs.jump_rate = [self](double, double, const Vec& x) { return self.gamma_.f(x[0]); };
  cs.rate_bound = gamma_bound_;
  DerivativeOracles d;
  d.max_order = 3;
  d.jump_amplitude = [self](const MultiIndex& a, double, double z, const Vec& x) {
    return Vec{std::sqrt(z) * derivative(self.c_, a, x[0])};
  };
  d.log_rate = [self](const MultiIndex& a, double, double, const Vec& x) {
    return derivative(self.log_gamma_, a, x[0]);
  };
  cs.derivatives = d;
  return JumpModel(cs, MarkMeasure::density({{floor, 1.0, 1.0, -1.0}}), horizon);
}


WeakErrorReport three_regime_experiment(const ThreeRegimeExample& example, const TestFunction& f,
                                        const ThreeRegimeConfig& cfg, const std::vector<double>& epsilons) {
  if (epsilons.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least three epsilon values");
  const Vec x0{cfg.x0};
  const Observable obs = [&f](const Vec& x) { return f(x); };

  SimConfig sc;
  sc.horizon = cfg.horizon;
  sc.step = cfg.step;
  sc.paths = cfg.paths;
  sc.record = false;

  sc.seed = cfg.seed;
  sc.representation = Representation::Hybrid;
  const JumpModel lim = example.limit_truncated(cfg.horizon, cfg.floor);
  const auto reference = terminal_samples(lim, example.limit_truncated_region(cfg.floor), x0, obs, sc, cfg.workers);

  WeakErrorReport rep;
  rep.parameter_name = "epsilon";
  rep.level = cfg.level;
  sc.representation = Representation::Fictive;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    sc.seed = derive_seed(cfg.seed, i);
    const JumpModel src = example.at(epsilons[i]).source(cfg.horizon);
    const auto samples = terminal_samples(src, Region::all(), x0, obs, sc, cfg.workers);
    rep.rows.push_back({epsilons[i], weak_error(samples, reference, cfg.level), cfg.paths});
  }
  rep.fit_rows();
  return rep;
}

}  // namespace hybridjump
