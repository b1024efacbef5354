#include "hybridjump/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hybridjump/error.hpp"

namespace hybridjump {

namespace {

// Largest abscissa parameter; beyond it the endpoint distance underflows.
constexpr double kTMax = 6.0;

struct Node {
  double left, right;  // a + h*dist, b - h*dist
  double weight;
};

// Node pair at parameter t >= 0. dist = 1 - tanh(u) computed without
// cancellation so points crowd the endpoints with full relative precision.
Node node_at(double t, double a, double half) {
  const double u = 0.5 * std::numbers::pi * std::sinh(t);
  const double e = std::exp(-2.0 * u);
  const double dist = 2.0 * e / (1.0 + e);
  const double ch = std::cosh(u);
  const double w = 0.5 * std::numbers::pi * std::cosh(t) / (ch * ch);
  return {a + half * dist, (a + 2.0 * half) - half * dist, w};
}

}  // namespace

std::vector<double> integrate_many(const MultiIntegrand& f, std::size_t m, double a, double b,
                                   const QuadratureOptions& opt) {
  std::vector<double> result(m, 0.0);
  if (!(b > a)) return result;
  if (!std::isfinite(a) || !std::isfinite(b))
    throw Error(ErrorCode::InvalidArgument, "tanh-sinh needs a finite interval");

  const double half = 0.5 * (b - a);
  std::vector<double> sum(m, 0.0), abs_sum(m, 0.0), prev(m, 0.0), buf(m);

  auto accumulate = [&](double x, double w) {
    if (!(x > a) || !(x < b) || w == 0.0) return;
    f(x, buf);
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::isfinite(buf[i]))
        throw Error(ErrorCode::QuadratureDivergence,
                    "non-finite integrand at z=" + std::to_string(x));
      sum[i] += w * buf[i];
      abs_sum[i] += w * std::abs(buf[i]);
    }
  };
  auto add_t = [&](double t) {
    const Node n = node_at(t, a, half);
    accumulate(n.left, n.weight);
    if (t > 0.0) accumulate(n.right, n.weight);
  };

  // Level 0: step 1 over [-tmax, tmax].
  double h = 1.0;
  for (int j = 0; j <= static_cast<int>(kTMax); ++j) add_t(j * h);
  for (std::size_t i = 0; i < m; ++i) prev[i] = sum[i] * h * half;

  for (int level = 1; level <= opt.max_level; ++level) {
    h *= 0.5;
    for (double t = h; t <= kTMax; t += 2.0 * h) add_t(t);
    bool done = level >= 3;
    for (std::size_t i = 0; i < m; ++i) {
      const double cur = sum[i] * h * half;
      const double scale = abs_sum[i] * h * half;
      if (std::abs(cur - prev[i]) > std::max(opt.abs_tol, opt.rel_tol * scale)) done = false;
      prev[i] = cur;
    }
    if (done) return prev;
  }
  throw Error(ErrorCode::QuadratureDivergence,
              "tanh-sinh did not converge on (" + std::to_string(a) + ", " + std::to_string(b) + "]");
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt) {
  return integrate_many([&](double z, std::span<double> out) { out[0] = f(z); }, 1, a, b, opt)[0];
}

GaussLegendre::GaussLegendre(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre needs n >= 1");
  nodes_.resize(n);
  weights_.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes_[n - 1 - i] = x;
    nodes_[i] = -x;
    weights_[i] = weights_[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes_[n / 2] = 0.0;
}

}  // namespace hybridjump
