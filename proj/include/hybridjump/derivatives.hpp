#pragma once

#include <functional>
#include <vector>

#include "hybridjump/model.hpp"

namespace hybridjump {

// All ordered tuples in {0..d-1}^order.
std::vector<MultiIndex> multi_indices(std::size_t d, int order);

// Central-difference step for a derivative of the given order at x. Higher
// orders need larger steps to keep round-off (~eps/h^order) under control.
double fd_step(int order, const Vec& x, double base);

// Nested central differences of g along the multi-index.
Vec fd_partial(const std::function<Vec(const Vec&)>& g, const Vec& x, const MultiIndex& alpha, double base);

// Derivatives of the coefficients in x: oracle when declared to that order,
// finite differences otherwise (if allowed), MissingDerivative if neither.
class CoefficientDerivatives {
 public:
  explicit CoefficientDerivatives(const CoefficientSet& c) : c_(c) {}

  Vec drift(const MultiIndex& a, double t, const Vec& x) const;
  // Column l of the diffusion; with a covariance field the columns are those
  // of its square root.
  Vec diffusion(std::size_t l, const MultiIndex& a, double t, const Vec& x) const;
  std::size_t diffusion_columns() const;
  Vec amplitude(const MultiIndex& a, double t, double z, const Vec& x) const;
  double log_rate(const MultiIndex& a, double t, double z, const Vec& x) const;

  bool uses_oracle(int order) const {
    return c_.derivatives && order <= c_.derivatives->max_order;
  }

 private:
  void require_fd(int order) const;
  const CoefficientSet& c_;
};

}  // namespace hybridjump
