#include "hybridjump/generator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

#include "hybridjump/error.hpp"
#include "hybridjump/simulate.hpp"

namespace hybridjump {

namespace {

TestFunction coordinatewise(std::string name, double (*g)(double), double (*g1)(double), double (*g2)(double)) {
  TestFunction t;
  t.name = std::move(name);
  t.f = [g](const Vec& x) {
    double s = 0.0;
    for (double v : x) s += g(v);
    return s;
  };
  t.gradient = [g1](const Vec& x) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = g1(x[i]);
    return r;
  };
  t.hessian = [g2](const Vec& x) {
    Mat h(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) h(i, i) = g2(x[i]);
    return h;
  };
  return t;
}

}  // namespace

TestFunction sine_function() {
  auto t = coordinatewise(
      "sin", [](double v) { return std::sin(v); }, [](double v) { return std::cos(v); },
      [](double v) { return -std::sin(v); });
  t.norm_bound = {1.0, 2.0, 3.0, 4.0};  // per coordinate, d = 1
  return t;
}

TestFunction cosine_function() {
  auto t = coordinatewise(
      "cos", [](double v) { return std::cos(v); }, [](double v) { return -std::sin(v); },
      [](double v) { return -std::cos(v); });
  t.norm_bound = {1.0, 2.0, 3.0, 4.0};
  return t;
}

TestFunction gaussian_bump() {
  TestFunction t;
  t.name = "exp_neg_sq";
  t.f = [](const Vec& x) { return std::exp(-x.dot(x)); };
  t.gradient = [](const Vec& x) { return x * (-2.0 * std::exp(-x.dot(x))); };
  t.hessian = [](const Vec& x) {
    const double e = std::exp(-x.dot(x));
    Mat h = Mat::outer(x, x) * (4.0 * e);
    for (std::size_t i = 0; i < x.size(); ++i) h(i, i) -= 2.0 * e;
    return h;
  };
  // d = 1: sup|f'| = sqrt(2/e) at x^2 = 1/2, sup|f''| = 2 at 0, sup|f'''| at
  // x^2 = (3 - sqrt 6)/2 where f'''' vanishes; the bounds are cumulative.
  const double s1 = std::sqrt(2.0 / std::exp(1.0));
  const double x3 = std::sqrt(0.5 * (3.0 - std::sqrt(6.0)));
  const double s3 = (12.0 * x3 - 8.0 * x3 * x3 * x3) * std::exp(-x3 * x3);
  t.norm_bound = {1.0, 1.0 + s1, 3.0 + s1, 3.0 + s1 + s3};
  return t;
}

TestFunction quadratic_function() {
  TestFunction t;
  t.name = "quadratic";
  t.f = [](const Vec& x) { return x.dot(x); };
  t.gradient = [](const Vec& x) { return x * 2.0; };
  t.hessian = [](const Vec& x) { return Mat::identity(x.size()) * 2.0; };
  t.norm_bound = {kInf, kInf, kInf, kInf};
  return t;
}

TestFunction affine_function(Vec a, double b) {
  TestFunction t;
  t.name = "affine";
  t.f = [a, b](const Vec& x) { return a.dot(x) + b; };
  t.gradient = [a](const Vec&) { return a; };
  t.hessian = [](const Vec& x) { return Mat(x.size()); };
  t.norm_bound = {kInf, kInf, kInf, kInf};
  return t;
}

TestFunction constant_function(double c) {
  TestFunction t;
  t.name = "constant";
  t.f = [c](const Vec&) { return c; };
  t.gradient = [](const Vec& x) { return Vec(x.size()); };
  t.hessian = [](const Vec& x) { return Mat(x.size()); };
  t.norm_bound = {std::abs(c), std::abs(c), std::abs(c), std::abs(c)};
  return t;
}

double jump_part(const JumpModel& m, const TestFunction& f, double t, const Vec& x, const GeneratorOptions& opt) {
  const auto& c = m.coefficients();
  if (!c.jump_amplitude) return 0.0;
  const double fx = f(x);
  const auto& mu = m.measure();
  auto rate = [&](double z) {
    const double g = c.gamma(t, z, x);
    if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteCoefficient, "gamma not finite");
    return g;
  };
  auto amp = [&](double z) {
    const Vec v = c.c(t, z, x);
    if (!v.finite()) throw Error(ErrorCode::NonFiniteCoefficient, "jump amplitude not finite");
    return v;
  };
  if (!opt.compensation_cutoff) {
    return mu.integrate([&](double z) { return (f(x + amp(z)) - fx) * rate(z); }, Region::all(), opt.quad);
  }
  const double r = *opt.compensation_cutoff;
  const Region near = Region::interval(-r, r);
  const Region far = Region::all().difference(near);
  const Vec grad = f.gradient(x);
  const double outer = mu.integrate([&](double z) { return (f(x + amp(z)) - fx) * rate(z); }, far, opt.quad);
  const double inner = mu.integrate(
      [&](double z) {
        const Vec cz = amp(z);
        return (f(x + cz) - fx - grad.dot(cz)) * rate(z);
      },
      near, opt.quad);
  // Drift of the near part, one component at a time.
  double drift = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    drift += grad[i] * mu.integrate([&](double z) { return amp(z)[i] * rate(z); }, near, opt.quad);
  return outer + inner + drift;
}

double apply_generator(const JumpModel& m, const TestFunction& f, double t, const Vec& x,
                       const GeneratorOptions& opt) {
  const auto& c = m.coefficients();
  double v = 0.0;
  if (c.has_diffusion()) {
    const Mat a = c.a(t, x);
    if (!a.finite()) throw Error(ErrorCode::NonFiniteCoefficient, "diffusion not finite");
    const Mat h = f.hessian(x);
    double tr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) tr += a(i, j) * h(j, i);
    v += 0.5 * tr;
  }
  if (c.drift) {
    const Vec b = c.drift(t, x);
    if (!b.finite()) throw Error(ErrorCode::NonFiniteCoefficient, "drift not finite");
    v += b.dot(f.gradient(x));
  }
  return v + jump_part(m, f, t, x, opt);
}

Operator generator_of(const JumpModel& m, GeneratorOptions opt) {
  return [m, opt](const TestFunction& f, double t, const Vec& x) { return apply_generator(m, f, t, x, opt); };
}

namespace {
struct Pt {
  double t;
  const Vec* x;
};
std::vector<Pt> grid_points(const Grid& g) {
  if (g.times.empty() || g.states.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  std::vector<Pt> p;
  for (double t : g.times)
    for (const auto& x : g.states) p.push_back({t, &x});
  return p;
}
}  // namespace

double generator_distance(const Operator& a, const Operator& b, const TestFunction& f, const Grid& grid, int k,
                          int workers) {
  const auto pts = grid_points(grid);
  const WeightedNorm psi{k};
  const long n = static_cast<long>(pts.size());
  std::vector<double> v(pts.size());
  std::vector<std::exception_ptr> err(pts.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers > 0 ? workers : default_workers())
  for (long i = 0; i < n; ++i) {
    try {
      const auto& p = pts[i];
      v[i] = std::abs(a(f, p.t, *p.x) - b(f, p.t, *p.x)) / psi(*p.x);
    } catch (...) {
      err[i] = std::current_exception();
    }
  }
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  return *std::max_element(v.begin(), v.end());
}

double generator_distance_serial(const Operator& a, const Operator& b, const TestFunction& f, const Grid& grid,
                                 int k) {
  const WeightedNorm psi{k};
  double best = 0.0;
  for (const auto& p : grid_points(grid))
    best = std::max(best, std::abs(a(f, p.t, *p.x) - b(f, p.t, *p.x)) / psi(*p.x));
  return best;
}

double generator_distance(const JumpModel& a, const JumpModel& b, const TestFunction& f, const Grid& grid, int k,
                          const GeneratorOptions& opt, int workers) {
  return generator_distance(generator_of(a, opt), generator_of(b, opt), f, grid, k, workers);
}

}  // namespace hybridjump
