#pragma once

#include <string>
#include <vector>

#include "hybridjump/model.hpp"
#include <json.hpp>

namespace hybridjump {

// sup over the grid of (int_G |g|^p gamma dmu)^{1/p} for p = 1..p_max.
struct NormTable {
  std::string name;
  MultiIndex alpha;
  std::vector<double> abs_norm;  // abs_norm[p-1] = |g|_{G,p}

  // [g]_{G,P} = max over integer 1 <= p <= P
  double bracket(int p) const;
};

struct RegularityOptions {
  int q = 1;
  double horizon = 1.0;
  double c_universal = 1.0;
  int p = 0;  // report theta_{q,p}, a_p, alpha_{q,p} at this p; 0 means 4q
  QuadratureOptions quad{};
  int workers = 0;
};

struct RegularityReport {
  int q = 0;
  int p = 0;
  int p_max = 0;
  double horizon = 0.0;
  double c_universal = 1.0;
  std::string region;
  Grid grid;

  // coefficient norms; per-multi-index entries are kept for recomputation
  std::vector<std::pair<MultiIndex, double>> sigma_partials;  // ||d^a sigma||_{(mu,inf)}
  std::vector<std::pair<MultiIndex, double>> drift_partials;  // ||d^a b||_inf
  double sigma_grad = 0.0;   // ||grad sigma||_{(mu,inf)}
  double drift_grad = 0.0;   // ||grad b||_inf
  double sigma_2q = 0.0;     // ||sigma||_{2,q,(mu,inf)}
  double drift_2q = 0.0;     // ||b||_{2,q,inf}

  NormTable grad_c;
  std::vector<NormTable> c_partials;          // orders 2..q
  std::vector<NormTable> log_gamma_partials;  // orders 1..q
  double gamma_functional = 0.0;              // Gamma_{G,q}(gamma)

  // assembled at the report's p and for Q_q
  double theta = 0.0;        // theta_{q,p}
  double a = 0.0;            // a_p
  double log_alpha = 0.0;    // ln alpha_{q,p}(C,G)
  double theta_q = 0.0;      // theta_{q,4q^2}
  double a_q = 0.0;          // a_{4q^2}
  double log_alpha_q = 0.0;  // ln alpha_{q,4q}(C,G)
  double log_gamma_bracket_sum = 0.0;  // sum_{1<=|b|<=q} [d^b ln gamma]_{G,4q}
  double log_Q = 0.0;        // ln Q_q(T, P)

  double theta_at(int q, int p) const;
  double a_at(int p) const;
  double log_alpha_at(int q, int p) const;
  double Q() const;

  nlohmann::json to_json() const;
};

// Pure functions of the ingredients, shared by the report and its consumers.
double harmonic(int q);
double log_alpha_from(double c_universal, int q, double horizon, double theta_qpq, double a_pq);
double log_Q_from(double c_universal, int q, double horizon, double log_alpha_q4q, double gamma_functional,
                  double log_gamma_bracket_sum);

RegularityReport regularity_report(const JumpModel& m, const Region& g, const Grid& grid,
                                   const RegularityOptions& opt);

struct LocalizationBound {
  double value = 0.0;
  double alpha_difference = 0.0;  // alpha(G2 \ G1)
  double sigma_grad = 0.0;
  double drift_grad = 0.0;
  double c_mu = 0.0;
  bool c_mu_estimated = false;
  double gap = 0.0;
  double horizon = 0.0;
  double c_universal = 1.0;

  double gradient_sum() const { return sigma_grad + drift_grad + c_mu; }
  double at(double c_universal) const;
};

LocalizationBound localization_bound(const JumpModel& m, const Region& g1, const Region& g2, double horizon,
                                     double c_universal, double gap, const Grid& grid,
                                     const QuadratureOptions& quad = {});

// Smallest C >= 0 with bound(C) >= empirical.
double calibrate_universal_constant(const LocalizationBound& b, double empirical);

}  // namespace hybridjump
