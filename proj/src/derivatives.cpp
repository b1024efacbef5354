#include "hybridjump/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hybridjump/error.hpp"

namespace hybridjump {

std::vector<MultiIndex> multi_indices(std::size_t d, int order) {
  std::vector<MultiIndex> out;
  if (order <= 0) return {MultiIndex{}};
  MultiIndex cur(order, 0);
  while (true) {
    out.push_back(cur);
    int k = order - 1;
    while (k >= 0 && cur[k] == static_cast<int>(d) - 1) cur[k--] = 0;
    if (k < 0) break;
    ++cur[k];
  }
  return out;
}

double fd_step(int order, const Vec& x, double base) {
  const double floor = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (order + 2));
  return std::max(base, floor) * (1.0 + x.norm());
}

namespace {
Vec nested(const std::function<Vec(const Vec&)>& g, const Vec& x, const MultiIndex& a, std::size_t k,
           double h) {
  if (k == 0) return g(x);
  const int i = a[k - 1];
  Vec xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (nested(g, xp, a, k - 1, h) - nested(g, xm, a, k - 1, h)) * (0.5 / h);
}
}  // namespace

Vec fd_partial(const std::function<Vec(const Vec&)>& g, const Vec& x, const MultiIndex& a, double base) {
  return nested(g, x, a, a.size(), fd_step(static_cast<int>(a.size()), x, base));
}

void CoefficientDerivatives::require_fd(int order) const {
  if (!c_.finite_difference_fallback)
    throw Error(ErrorCode::MissingDerivative,
                "derivative of order " + std::to_string(order) + " requested beyond the declared oracles");
}

Vec CoefficientDerivatives::drift(const MultiIndex& a, double t, const Vec& x) const {
  const int k = static_cast<int>(a.size());
  if (!c_.drift) return Vec(c_.dim);
  if (uses_oracle(k) && c_.derivatives->drift) return c_.derivatives->drift(a, t, x);
  require_fd(k);
  return fd_partial([&](const Vec& y) { return c_.drift(t, y); }, x, a, c_.fd_step);
}

std::size_t CoefficientDerivatives::diffusion_columns() const {
  if (!c_.diffusion.empty()) return c_.diffusion.size();
  return c_.covariance ? c_.dim : 0;
}

Vec CoefficientDerivatives::diffusion(std::size_t l, const MultiIndex& a, double t, const Vec& x) const {
  const int k = static_cast<int>(a.size());
  if (!c_.diffusion.empty()) {
    if (uses_oracle(k) && c_.derivatives->diffusion) return c_.derivatives->diffusion(a, l, t, x);
    require_fd(k);
    return fd_partial([&](const Vec& y) { return c_.diffusion[l](t, y); }, x, a, c_.fd_step);
  }
  if (!c_.covariance) return Vec(c_.dim);
  auto column = [&](const Vec& y) {
    const Mat r = psd_sqrt(c_.covariance(t, y));
    Vec v(c_.dim);
    for (std::size_t i = 0; i < c_.dim; ++i) v[i] = r(i, l);
    return v;
  };
  if (k == 0) return column(x);
  require_fd(k);
  return fd_partial(column, x, a, c_.fd_step);
}

Vec CoefficientDerivatives::amplitude(const MultiIndex& a, double t, double z, const Vec& x) const {
  const int k = static_cast<int>(a.size());
  if (!c_.jump_amplitude) return Vec(c_.dim);
  if (k == 0) return c_.jump_amplitude(t, z, x);
  if (uses_oracle(k) && c_.derivatives->jump_amplitude) return c_.derivatives->jump_amplitude(a, t, z, x);
  require_fd(k);
  return fd_partial([&](const Vec& y) { return c_.jump_amplitude(t, z, y); }, x, a, c_.fd_step);
}

double CoefficientDerivatives::log_rate(const MultiIndex& a, double t, double z, const Vec& x) const {
  const int k = static_cast<int>(a.size());
  if (!c_.jump_rate) return k == 0 ? std::log(c_.rate_bound) : 0.0;
  if (k == 0) return std::log(c_.jump_rate(t, z, x));
  if (uses_oracle(k) && c_.derivatives->log_rate) return c_.derivatives->log_rate(a, t, z, x);
  require_fd(k);
  return fd_partial([&](const Vec& y) { return Vec{std::log(c_.jump_rate(t, z, y))}; }, x, a, c_.fd_step)[0];
}

}  // namespace hybridjump
