#pragma once

// Small models shared by the CLI validate suite, the tests and the benches.

#include <optional>
#include <string>
#include <vector>

#include "hybridjump/model.hpp"
#include "hybridjump/quadrature.hpp"

namespace hybridjump {

// d = 1, sigma constant, b(x) = drift * x, c(z, x) = amplitude * z * (1 + cos(x)/2),
// gamma(z, x) = Gamma (1/2 + 2/5 sin(x + z)) unless a constant rate is given.
struct DiscreteToy {
  std::vector<Atom> atoms{{-1.0, 0.5}, {0.5, 1.0}, {1.5, 0.5}};
  double rate_bound = 2.0;
  double drift = -0.5;
  double sigma = 0.0;
  double amplitude = 0.5;
  std::optional<double> constant_rate;
};
JumpModel discrete_toy(const DiscreteToy& p, double horizon);

struct NamedModel {
  std::string name;
  JumpModel model;
  Region region;
};
std::vector<NamedModel> reference_models(double horizon = 1.0);

// Masses of the real-shock kernel q_G at (t, x): the sentinel mass computed
// as the rejection mass int_G (2 Gamma - gamma) dmu / (2 Gamma mu(G)), and
// the jump mass int_G gamma dmu / (2 Gamma mu(G)). They must sum to one.
struct KernelMass {
  double sentinel = 0.0;
  double jump = 0.0;
};
KernelMass real_shock_kernel(const JumpModel& m, const Region& g, double t, const Vec& x,
                             const QuadratureOptions& quad = {});

}  // namespace hybridjump
