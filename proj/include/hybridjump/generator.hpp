#pragma once

#include <array>
#include <functional>
#include <optional>
#include <cmath>
#include <string>

#include "hybridjump/model.hpp"

namespace hybridjump {

struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  std::array<double, 4> norm_bound{};  // ||f||_{q,inf}, q = 0..3

  double operator()(const Vec& x) const { return f(x); }
};

// Sums over coordinates: f(x) = sum_i g(x_i) for sin, cos; radial otherwise.
TestFunction sine_function();
TestFunction cosine_function();
TestFunction gaussian_bump();           // exp(-|x|^2)
TestFunction quadratic_function();      // |x|^2
TestFunction affine_function(Vec a, double b);
TestFunction constant_function(double c);

struct WeightedNorm {
  int k = 0;
  double operator()(const Vec& x) const { return std::pow(1.0 + x.dot(x), 0.5 * k); }
};

struct GeneratorOptions {
  QuadratureOptions quad{};
  // When set, marks with |z| <= cutoff use the compensated form
  // f(x+c) - f(x) - grad f . c plus grad f . int c gamma dmu.
  std::optional<double> compensation_cutoff;
};

// 1/2 Tr[a D^2 f] + b . grad f + int_E (f(x+c) - f(x)) gamma dmu
double apply_generator(const JumpModel& m, const TestFunction& f, double t, const Vec& x,
                       const GeneratorOptions& opt = {});
double jump_part(const JumpModel& m, const TestFunction& f, double t, const Vec& x,
                 const GeneratorOptions& opt = {});

using Operator = std::function<double(const TestFunction&, double t, const Vec& x)>;
Operator generator_of(const JumpModel& m, GeneratorOptions opt = {});

// max over the grid of |A f - B f| / psi_k
double generator_distance(const Operator& a, const Operator& b, const TestFunction& f, const Grid& grid, int k,
                          int workers = 0);
double generator_distance_serial(const Operator& a, const Operator& b, const TestFunction& f, const Grid& grid,
                                 int k);
double generator_distance(const JumpModel& a, const JumpModel& b, const TestFunction& f, const Grid& grid, int k,
                          const GeneratorOptions& opt = {}, int workers = 0);

}  // namespace hybridjump
