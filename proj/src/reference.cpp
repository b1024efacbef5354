#include "hybridjump/reference.hpp"

#include <cmath>

#include "hybridjump/error.hpp"
#include "hybridjump/regimes.hpp"

namespace hybridjump {

JumpModel discrete_toy(const DiscreteToy& p, double horizon) {
  CoefficientSet c;
  c.dim = 1;
  const double drift = p.drift, amp = p.amplitude, bound = p.rate_bound;
  if (drift != 0.0) c.drift = [drift](double, const Vec& x) { return Vec{drift * x[0]}; };
  if (p.sigma != 0.0) {
    const double s = p.sigma;
    c.diffusion.push_back([s](double, const Vec&) { return Vec{s}; });
  }
  c.jump_amplitude = [amp](double, double z, const Vec& x) { return Vec{amp * z * (1.0 + 0.5 * std::cos(x[0]))}; };
  c.rate_bound = bound;
  if (p.constant_rate) {
    const double g = *p.constant_rate;
    c.jump_rate = [g](double, double, const Vec&) { return g; };
  } else {
    c.jump_rate = [bound](double, double z, const Vec& x) { return bound * (0.5 + 0.4 * std::sin(x[0] + z)); };
  }
  return JumpModel(std::move(c), MarkMeasure::discrete(p.atoms), horizon);
}

std::vector<NamedModel> reference_models(double horizon) {
  std::vector<NamedModel> out;
  out.push_back({"discrete_toy", discrete_toy({}, horizon), Region::all()});
  DiscreteToy flat;
  flat.rate_bound = 3.0;
  flat.atoms = {{-1.0, 0.5}, {0.5, 1.0}, {1.5, 0.5}};
  flat.constant_rate = 1.2;
  out.push_back({"constant_rate_toy", discrete_toy(flat, horizon), Region::all()});
  const auto ex = ThreeRegimeExample::standard(0.01);
  out.push_back({"three_regime_source", ex.source(horizon), Region::all()});
  out.push_back({"three_regime_limit", ex.limit_truncated(horizon, 1e-4), ex.limit_truncated_region(1e-4)});
  return out;
}

KernelMass real_shock_kernel(const JumpModel& m, const Region& g, double t, const Vec& x,
                             const QuadratureOptions& quad) {
  const double mass = m.measure().mass(g);
  if (!std::isfinite(mass)) throw Error(ErrorCode::InfiniteMass, "real-shock kernel needs mu(G) finite");
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "real-shock kernel needs mu(G) > 0");
  const auto& c = m.coefficients();
  const double two_gamma = 2.0 * c.rate_bound;
  const auto v = m.measure().integrate_many(
      [&](double z, std::span<double> out) {
        const double r = c.gamma(t, z, x);
        out[0] = two_gamma - r;
        out[1] = r;
      },
      2, g, quad);
  return {v[0] / (two_gamma * mass), v[1] / (two_gamma * mass)};
}

}  // namespace hybridjump
