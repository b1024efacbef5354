#include "hybridjump/weakerr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "hybridjump/error.hpp"
#include "hybridjump/rng.hpp"

namespace hybridjump {

namespace {

void require_nonempty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "sample array is empty");
}

double z_quantile(double level) {
  boost::math::normal n;
  return boost::math::quantile(n, 0.5 + 0.5 * level);
}

struct MeanVar {
  double mean;
  double var;  // unbiased, 0 for n = 1
};

// Two-pass mean and variance: stable and bit-reproducible.
MeanVar mean_var(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  const double m = s / static_cast<double>(x.size());
  double q = 0.0;
  for (double v : x) q += (v - m) * (v - m);
  return {m, x.size() > 1 ? q / static_cast<double>(x.size() - 1) : 0.0};
}

WeakErrorEstimate from_diff(double diff, double se, double level, std::size_t na, std::size_t nb) {
  WeakErrorEstimate e;
  e.signed_diff = diff;
  e.estimate = std::abs(diff);
  e.std_error = se;
  const double h = z_quantile(level) * se;
  const double lo = diff - h, hi = diff + h;
  // CI for |diff| as the image of the signed interval.
  if (lo <= 0.0 && hi >= 0.0) {
    e.ci_low = 0.0;
    e.ci_high = std::max(-lo, hi);
  } else {
    e.ci_low = std::min(std::abs(lo), std::abs(hi));
    e.ci_high = std::max(std::abs(lo), std::abs(hi));
  }
  e.n_a = na;
  e.n_b = nb;
  return e;
}

}  // namespace

WeakErrorEstimate weak_error(std::span<const double> a, std::span<const double> b, double level) {
  require_nonempty(a, b);
  const auto ma = mean_var(a), mb = mean_var(b);
  const double se = std::sqrt(ma.var / a.size() + mb.var / b.size());
  return from_diff(ma.mean - mb.mean, se, level, a.size(), b.size());
}

WeakErrorEstimate paired_weak_error(std::span<const double> a, std::span<const double> b, double level) {
  require_nonempty(a, b);
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const auto md = mean_var(d);
  return from_diff(md.mean, std::sqrt(md.var / d.size()), level, a.size(), b.size());
}

WeakErrorEstimate weak_error_bootstrap(std::span<const double> a, std::span<const double> b, double level,
                                       std::size_t resamples, std::uint64_t seed) {
  WeakErrorEstimate e = weak_error(a, b, level);
  if (resamples < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least two resamples");
  std::vector<double> stats(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    RngStream rng(seed, r);
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += a[rng.index(a.size())];
    for (std::size_t i = 0; i < b.size(); ++i) sb += b[rng.index(b.size())];
    stats[r] = std::abs(sa / a.size() - sb / b.size());
  }
  std::sort(stats.begin(), stats.end());
  auto at = [&](double q) {
    const double pos = q * (resamples - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - i;
    return i + 1 < resamples ? stats[i] * (1 - f) + stats[i + 1] * f : stats[i];
  };
  e.ci_low = std::min(at(0.5 - 0.5 * level), e.estimate);
  e.ci_high = std::max(at(0.5 + 0.5 * level), e.estimate);
  return e;
}

RateFit fit_rate(std::span<const double> params, std::span<const double> errors) {
  if (params.size() != errors.size()) throw Error(ErrorCode::InvalidArgument, "length mismatch");
  if (params.size() < 3) throw Error(ErrorCode::DegenerateFit, "need at least three points");
  const std::size_t n = params.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(params[i] > 0.0) || !(errors[i] > 0.0))
      throw Error(ErrorCode::InvalidArgument, "fit_rate needs positive inputs");
    x[i] = std::log(params[i]);
    y[i] = std::log(errors[i]);
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 1e-300 * n) throw Error(ErrorCode::DegenerateFit, "parameters are not distinct");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
  return f;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.3) {
    // Series in exp(-pi^2/(8 lambda^2)) converges fast for small lambda.
    const double pi = 3.14159265358979323846;
    const double w = std::exp(-pi * pi / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int k = 1; k <= 7; k += 2) s += std::pow(w, k * k);
    return 1.0 - std::sqrt(2.0 * pi) / lambda * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require_nonempty(a, b);
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = x.size(), m = y.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Advance through ties on both sides before comparing the ECDFs.
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  TestResult r;
  r.statistic = d;
  const double ne = n * m / (n + m);
  const double sq = std::sqrt(ne);
  r.p_value = d == 0.0 ? 1.0 : kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

TestResult chi_square_cells(std::span<const double> observed, std::span<const double> probabilities,
                            std::size_t fitted_params) {
  if (observed.size() != probabilities.size()) throw Error(ErrorCode::InvalidArgument, "length mismatch");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  if (total <= 0.0) throw Error(ErrorCode::EmptySample, "no observations");
  // Pool adjacent cells so every expected count is >= 5.
  std::vector<double> obs, expct;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    o += observed[k];
    e += probabilities[k] * total;
    if (e >= 5.0) {
      obs.push_back(o);
      expct.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (expct.empty()) {
      obs.push_back(o);
      expct.push_back(e);
    } else {
      obs.back() += o;
      expct.back() += e;
    }
  }
  TestResult r;
  for (std::size_t k = 0; k < obs.size(); ++k) r.statistic += (obs[k] - expct[k]) * (obs[k] - expct[k]) / expct[k];
  if (obs.size() <= 1 + fitted_params) {
    r.dof = 0;
    r.p_value = 1.0;
    return r;
  }
  r.dof = obs.size() - 1 - fitted_params;
  boost::math::chi_squared dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

TestResult chi_square_poisson(std::span<const std::uint64_t> counts, double lambda) {
  if (counts.empty()) throw Error(ErrorCode::EmptySample, "no counts");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  const std::uint64_t kmax = *std::max_element(counts.begin(), counts.end());
  // Cells 0..K-1 plus an upper tail cell {>= K}, K beyond both data and mass.
  std::uint64_t K = std::max<std::uint64_t>(kmax + 1, static_cast<std::uint64_t>(lambda + 10.0 * std::sqrt(lambda) + 10));
  std::vector<double> obs(K + 1, 0.0), prob(K + 1, 0.0);
  for (auto c : counts) obs[std::min<std::uint64_t>(c, K)] += 1.0;
  double p = std::exp(-lambda), acc = 0.0;
  for (std::uint64_t k = 0; k < K; ++k) {
    prob[k] = p;
    acc += p;
    p *= lambda / (k + 1.0);
  }
  prob[K] = std::max(0.0, 1.0 - acc);
  return chi_square_cells(obs, prob);
}

SampleMoments raw_moments(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptySample, "no samples");
  SampleMoments m{};
  std::vector<double> p(x.size());
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::pow(x[i], k + 1);
    const auto mv = mean_var(p);
    m.mean[k] = mv.mean;
    m.std_error[k] = std::sqrt(mv.var / x.size());
  }
  return m;
}

void WeakErrorReport::fit_rows() {
  std::vector<double> p, e;
  for (const auto& r : rows) {
    p.push_back(r.parameter);
    e.push_back(r.error.estimate);
  }
  // no log-log fit through zero errors (e.g. a constant test function)
  for (double v : e)
    if (!(v > 0.0)) {
      const double nan = std::nan("");
      fit = {nan, nan, nan, nan};
      fitted = false;
      return;
    }
  fit = fit_rate(p, e);
  fitted = true;
}

}  // namespace hybridjump
