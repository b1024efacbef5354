#pragma once

#include <array>
#include <functional>
#include <vector>

#include "hybridjump/generator.hpp"
#include "hybridjump/model.hpp"
#include "hybridjump/simulate.hpp"
#include "hybridjump/weakerr.hpp"

namespace hybridjump {

struct RegimeSplit {
  Region a;  // diffusive small jumps
  Region b;  // drift-like jumps
  Region c;  // jumps kept

  // Pairwise disjoint and covering the support of mu, checked by mass to 1e-12.
  void check(const MarkMeasure& mu) const;
};

struct DeltaReport {
  double sigma = 0.0;
  double drift = 0.0;
  double amplitude_rate = 0.0;  // delta_{c,gamma}
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double total() const { return sigma + drift + amplitude_rate + a + b + c; }
};

// Hybrid of a source model: a(x) = int_A c c^T gamma dmu, drift
// b(x) + int_B c gamma dmu, jumps on C. Quadratures run per evaluation.
JumpModel build_hybrid(const JumpModel& source, const RegimeSplit& split, const QuadratureOptions& quad = {});

// The split's drift/diffusion moments at (t, x).
Mat regime_covariance(const JumpModel& source, const Region& a, double t, const Vec& x, const QuadratureOptions& quad);
Vec regime_drift(const JumpModel& source, const Region& b, double t, const Vec& x, const QuadratureOptions& quad);

DeltaReport delta_functionals(const JumpModel& source, const JumpModel& limit, const RegimeSplit& split,
                              const Grid& grid, const QuadratureOptions& quad = {});

// Scalar function with derivatives up to order three.
struct Smooth3 {
  std::function<double(double)> f;
  std::array<std::function<double(double)>, 3> d;
};

// The explicit example: mu_eps = 1_(e,3e] dz/z^2 + 1_(3e,4e] dz/z^{3/2}
// + 1_(4e,1] dz/z, c_eps = c(x) sqrt z (1_(2e,1] - alpha 1_(e,2e]), and the
// limit sigma = beta1 c sqrt(gamma), b = beta2 c gamma with jumps c(x) sqrt z
// against dz/z on (0,1].
class ThreeRegimeExample {
 public:
  ThreeRegimeExample(double epsilon, Smooth3 c, Smooth3 gamma, Smooth3 log_gamma, double rate_bound);
  // c = 1/(1+x^2), gamma = 1 + exp(-x^2)/2
  static ThreeRegimeExample standard(double epsilon);

  static double alpha();
  static double beta1_squared();
  static double beta1();
  static double beta2();

  double epsilon() const { return eps_; }
  double rate_bound() const { return gamma_bound_; }
  ThreeRegimeExample at(double epsilon) const;

  MarkMeasure source_measure() const;
  MarkMeasure limit_measure() const;
  RegimeSplit split() const;
  double total_mass_closed_form() const;

  double c(double x) const { return c_.f(x); }
  double gamma(double x) const { return gamma_.f(x); }
  double amplitude(double z, double x) const;  // c_eps(z, x)
  double shape(double z) const;                // c_eps(z, x) / c(x)

  JumpModel source(double horizon) const;
  JumpModel limit(double horizon) const;  // infinite total mass
  // Limit with jumps on (floor, 1] only; the removed jumps are replaced by
  // their mean 2 sqrt(floor) c gamma and variance floor c^2 gamma.
  JumpModel limit_truncated(double horizon, double floor) const;
  Region limit_truncated_region(double floor) const { return Region::interval(floor, 1.0); }

 private:
  double eps_;
  Smooth3 c_, gamma_, log_gamma_;
  double gamma_bound_;
};

struct ThreeRegimeConfig {
  double horizon = 1.0;
  double step = 1e-3;
  std::size_t paths = 200000;
  std::uint64_t seed = 1;
  double x0 = 0.0;
  double floor = 1e-4;  // truncation of the limit's jump measure
  double level = 0.99;
  int workers = 0;
};

WeakErrorReport three_regime_experiment(const ThreeRegimeExample& example, const TestFunction& f,
                                        const ThreeRegimeConfig& cfg, const std::vector<double>& epsilons);

}  // namespace hybridjump
