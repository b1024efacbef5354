#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hybridjump {

struct QuadratureOptions {
  double rel_tol = 1e-12;  // relative to the integral of |f|
  double abs_tol = 1e-15;
  int max_level = 12;      // tanh-sinh halvings; level 12 is ~50k nodes
};

// Vector-valued integrand: writes m values for the point z into out.
using MultiIntegrand = std::function<void(double z, std::span<double> out)>;

// Adaptive tanh-sinh on (a, b]; the endpoints are never evaluated, so
// integrable algebraic endpoint singularities are fine. All components
// share nodes; refinement stops when every component meets tolerance.
// Throws QuadratureDivergence when max_level is reached first.
std::vector<double> integrate_many(const MultiIntegrand& f, std::size_t m, double a, double b,
                                   const QuadratureOptions& opt = {});

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt = {});

class GaussLegendre {
 public:
  explicit GaussLegendre(int n);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(c + h * nodes_[i]);
    return s * h;
  }

 private:
  std::vector<double> nodes_;    // ascending on (-1, 1)
  std::vector<double> weights_;
};

}  // namespace hybridjump
