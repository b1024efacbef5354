#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hybridjump {

struct WeakErrorEstimate {
  double estimate = 0.0;   // |mean(A) - mean(B)|
  double signed_diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double std_error = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Normal-approximation CI for mean(A) - mean(B), mapped through |.|.
WeakErrorEstimate weak_error(std::span<const double> a, std::span<const double> b, double level = 0.99);
// Same for paired samples (common random numbers): CI from the differences.
WeakErrorEstimate paired_weak_error(std::span<const double> a, std::span<const double> b, double level = 0.99);
// Percentile bootstrap of the absolute difference.
WeakErrorEstimate weak_error_bootstrap(std::span<const double> a, std::span<const double> b, double level,
                                       std::size_t resamples, std::uint64_t seed);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};
RateFit fit_rate(std::span<const double> params, std::span<const double> errors);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
};

// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);
// Chi-square of observed counts against Poisson(lambda); tail bins are pooled
// until every expected count is at least 5.
TestResult chi_square_poisson(std::span<const std::uint64_t> counts, double lambda);
// Chi-square of histogram counts against cell probabilities summing to 1.
TestResult chi_square_cells(std::span<const double> observed, std::span<const double> probabilities,
                            std::size_t fitted_params = 0);

struct SampleMoments {
  double mean[4];       // raw moments E X^k, k = 1..4
  double std_error[4];  // standard errors of those means
};
SampleMoments raw_moments(std::span<const double> x);

struct WeakErrorRow {
  double parameter;
  WeakErrorEstimate error;
  std::size_t n_paths;
};

struct WeakErrorReport {
  std::string parameter_name = "epsilon";
  double level = 0.99;
  std::vector<WeakErrorRow> rows;
  RateFit fit;
  bool fitted = false;

  void fit_rows();  // fit_rate over (parameter, estimate); unfitted (NaN) if an estimate is 0
};

}  // namespace hybridjump
