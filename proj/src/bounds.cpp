#include "hybridjump/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "hybridjump/derivatives.hpp"
#include "hybridjump/error.hpp"
#include "hybridjump/simulate.hpp"

namespace hybridjump {

double NormTable::bracket(int p) const {
  if (p < 1 || p > static_cast<int>(abs_norm.size()))
    throw Error(ErrorCode::InvalidArgument, "bracket exponent outside the computed table for " + name);
  return *std::max_element(abs_norm.begin(), abs_norm.begin() + p);
}

double harmonic(int q) {
  double h = 0.0;
  for (int n = 1; n <= q; ++n) h += 1.0 / n;
  return h;
}

double log_alpha_from(double c, int q, double T, double theta_qpq, double a_pq) {
  const double qh = q * harmonic(q);
  return std::log(c) + qh * std::log(theta_qpq) + c * T * qh * a_pq;
}

double log_Q_from(double c, int q, double T, double log_alpha_q4q, double gamma_functional, double bracket_sum) {
  return std::log(c) + q * std::log(std::max(T, 1.0)) + 2.0 * q * log_alpha_q4q +
         q * std::log(1.0 + gamma_functional + bracket_sum);
}

double RegularityReport::theta_at(int qq, int pp) const {
  if (qq > q) throw Error(ErrorCode::InvalidArgument, "theta requested beyond the report's q");
  double s = 1.0;
  for (const auto& [a, v] : sigma_partials)
    if (a.size() >= 2 && static_cast<int>(a.size()) <= qq) s += v;
  for (const auto& [a, v] : drift_partials)
    if (a.size() >= 2 && static_cast<int>(a.size()) <= qq) s += v;
  for (const auto& t : c_partials)
    if (static_cast<int>(t.alpha.size()) <= qq) s += t.bracket(pp);
  return s;
}

double RegularityReport::a_at(int pp) const {
  return sigma_grad * sigma_grad + drift_grad + std::pow(grad_c.bracket(pp), pp);
}

double RegularityReport::log_alpha_at(int qq, int pp) const {
  return log_alpha_from(c_universal, qq, horizon, theta_at(qq, pp * qq), a_at(pp * qq));
}

double RegularityReport::Q() const { return std::exp(log_Q); }

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

nlohmann::json table_json(const NormTable& t) {
  nlohmann::json j;
  j["name"] = t.name;
  j["alpha"] = t.alpha;
  nlohmann::json v = nlohmann::json::array();
  for (double x : t.abs_norm) v.push_back(number(x));
  j["abs_norm_by_p"] = v;
  return j;
}

std::string alpha_name(const std::string& base, const MultiIndex& a) {
  std::string s = "d[";
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s + "]" + base;
}

}  // namespace

nlohmann::json RegularityReport::to_json() const {
  nlohmann::json j;
  j["q"] = q;
  j["p"] = p;
  j["p_max"] = p_max;
  j["horizon"] = horizon;
  j["c_universal"] = c_universal;
  j["region"] = region;
  nlohmann::json g;
  g["times"] = grid.times;
  g["states"] = nlohmann::json::array();
  for (const auto& x : grid.states) g["states"].push_back(std::vector<double>(x.begin(), x.end()));
  j["grid"] = g;
  auto partials = [](const std::vector<std::pair<MultiIndex, double>>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [idx, val] : v) a.push_back({{"alpha", idx}, {"norm", number(val)}});
    return a;
  };
  j["sigma_partials"] = partials(sigma_partials);
  j["drift_partials"] = partials(drift_partials);
  j["sigma_grad"] = number(sigma_grad);
  j["drift_grad"] = number(drift_grad);
  j["sigma_2q"] = number(sigma_2q);
  j["drift_2q"] = number(drift_2q);
  j["grad_c"] = table_json(grad_c);
  j["c_partials"] = nlohmann::json::array();
  for (const auto& t : c_partials) j["c_partials"].push_back(table_json(t));
  j["log_gamma_partials"] = nlohmann::json::array();
  for (const auto& t : log_gamma_partials) j["log_gamma_partials"].push_back(table_json(t));
  j["gamma_functional"] = number(gamma_functional);
  j["theta_q_p"] = number(theta);
  j["a_p"] = number(a);
  j["log_alpha_q_p"] = number(log_alpha);
  j["theta_q_4qq"] = number(theta_q);
  j["a_4qq"] = number(a_q);
  j["log_alpha_q_4q"] = number(log_alpha_q);
  j["log_gamma_bracket_sum"] = number(log_gamma_bracket_sum);
  j["log_Q"] = number(log_Q);
  j["Q"] = number(Q());
  return j;
}

RegularityReport regularity_report(const JumpModel& m, const Region& g, const Grid& grid,
                                   const RegularityOptions& opt) {
  if (opt.q < 1) throw Error(ErrorCode::InvalidArgument, "q must be >= 1");
  if (grid.times.empty() || grid.states.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  const auto& coef = m.coefficients();
  const std::size_t d = m.dim();
  const int q = opt.q;
  const int p = opt.p > 0 ? opt.p : 4 * q;

  RegularityReport r;
  r.q = q;
  r.p = p;
  r.p_max = std::max(p * q, 4 * q * q);
  r.horizon = opt.horizon;
  r.c_universal = opt.c_universal;
  r.region = g.describe();
  r.grid = grid;

  const CoefficientDerivatives der(coef);
  if (q > 0 && coef.derivatives && q > coef.derivatives->max_order && !coef.finite_difference_fallback)
    throw Error(ErrorCode::MissingDerivative, "order " + std::to_string(q) + " beyond q_max");

  std::vector<std::pair<double, const Vec*>> pts;
  for (double t : grid.times)
    for (const auto& x : grid.states) pts.emplace_back(t, &x);

  // sigma and b partials: sup over the grid.
  for (int k = 1; k <= q; ++k) {
    for (const auto& a : multi_indices(d, k)) {
      double s_sup = 0.0, b_sup = 0.0;
      for (const auto& [t, x] : pts) {
        double s2 = 0.0;
        for (std::size_t l = 0; l < der.diffusion_columns(); ++l) {
          const Vec v = der.diffusion(l, a, t, *x);
          s2 += v.dot(v);
        }
        s_sup = std::max(s_sup, std::sqrt(s2));
        if (coef.drift) b_sup = std::max(b_sup, der.drift(a, t, *x).norm());
      }
      r.sigma_partials.emplace_back(a, s_sup);
      r.drift_partials.emplace_back(a, b_sup);
      if (k == 1) {
        r.sigma_grad += s_sup;
        r.drift_grad += b_sup;
      } else {
        r.sigma_2q += s_sup;
        r.drift_2q += b_sup;
      }
    }
  }

  // Integrands: grad c (sum over directions of |d_i c|), d^a c for
  // 2 <= |a| <= q, d^b ln gamma for 1 <= |b| <= q.
  struct Fn {
    std::string name;
    MultiIndex alpha;
    int kind;  // 0 grad c, 1 d^a c, 2 d^b ln gamma
  };
  std::vector<Fn> fns{{"grad_c", {}, 0}};
  for (int k = 2; k <= q; ++k)
    for (const auto& a : multi_indices(d, k)) fns.push_back({alpha_name("c", a), a, 1});
  for (int k = 1; k <= q; ++k)
    for (const auto& a : multi_indices(d, k)) fns.push_back({alpha_name("ln_gamma", a), a, 2});

  // Gamma_{G,q} terms: (h, rho) with |rho| <= h, exponent h/|rho|.
  struct GTerm {
    int h;
    std::size_t fn;  // index into fns of d^rho ln gamma
    double exponent;
  };
  std::vector<GTerm> gterms;
  for (int h = 1; h <= q; ++h)
    for (std::size_t i = 0; i < fns.size(); ++i)
      if (fns[i].kind == 2 && static_cast<int>(fns[i].alpha.size()) <= h)
        gterms.push_back({h, i, static_cast<double>(h) / fns[i].alpha.size()});

  const std::size_t nf = fns.size(), pm = static_cast<std::size_t>(r.p_max);
  const std::size_t ncomp = nf * pm + gterms.size();
  const long npts = static_cast<long>(pts.size());
  std::vector<std::vector<double>> per_point(pts.size());
  std::vector<std::exception_ptr> errors(pts.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(opt.workers > 0 ? opt.workers : default_workers())
  for (long ip = 0; ip < npts; ++ip) {
    try {
      const double t = pts[ip].first;
      const Vec& x = *pts[ip].second;
      std::vector<double> gv(nf);
      per_point[ip] = m.measure().integrate_many(
          [&](double z, std::span<double> out) {
            const double gam = coef.gamma(t, z, x);
            if (!std::isfinite(gam) || gam < 0.0)
              throw Error(ErrorCode::NonFiniteCoefficient, "gamma invalid inside the regularity integrals");
            for (std::size_t i = 0; i < nf; ++i) {
              const Fn& f = fns[i];
              if (f.kind == 0) {
                double s = 0.0;
                for (std::size_t dir = 0; dir < d; ++dir) s += der.amplitude({static_cast<int>(dir)}, t, z, x).norm();
                gv[i] = s;
              } else if (f.kind == 1) {
                gv[i] = der.amplitude(f.alpha, t, z, x).norm();
              } else {
                gv[i] = std::abs(der.log_rate(f.alpha, t, z, x));
              }
            }
            for (std::size_t i = 0; i < nf; ++i) {
              double pw = 1.0;
              for (std::size_t k = 0; k < pm; ++k) {
                pw *= gv[i];
                out[i * pm + k] = pw * gam;
              }
            }
            for (std::size_t k = 0; k < gterms.size(); ++k)
              out[nf * pm + k] = std::pow(gv[gterms[k].fn], gterms[k].exponent) * gam;
          },
          ncomp, g, opt.quad);
    } catch (...) {
      errors[ip] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<NormTable> tables(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    tables[i].name = fns[i].name;
    tables[i].alpha = fns[i].alpha;
    tables[i].abs_norm.assign(pm, 0.0);
  }
  for (const auto& v : per_point) {
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t k = 0; k < pm; ++k)
        tables[i].abs_norm[k] = std::max(tables[i].abs_norm[k], std::pow(std::max(v[i * pm + k], 0.0), 1.0 / (k + 1.0)));
    double gsum = 0.0;
    for (std::size_t k = 0; k < gterms.size(); ++k)
      gsum += std::pow(std::max(v[nf * pm + k], 0.0), static_cast<double>(q) / gterms[k].h);
    r.gamma_functional = std::max(r.gamma_functional, gsum);
  }
  r.grad_c = tables[0];
  for (std::size_t i = 1; i < nf; ++i) (fns[i].kind == 1 ? r.c_partials : r.log_gamma_partials).push_back(tables[i]);

  r.theta = r.theta_at(q, p * q);
  r.a = r.a_at(p * q);
  r.log_alpha = log_alpha_from(r.c_universal, q, r.horizon, r.theta, r.a);
  r.theta_q = r.theta_at(q, 4 * q * q);
  r.a_q = r.a_at(4 * q * q);
  r.log_alpha_q = log_alpha_from(r.c_universal, q, r.horizon, r.theta_q, r.a_q);
  r.log_gamma_bracket_sum = 0.0;
  for (const auto& t : r.log_gamma_partials) r.log_gamma_bracket_sum += t.bracket(4 * q);
  r.log_Q = log_Q_from(r.c_universal, q, r.horizon, r.log_alpha_q, r.gamma_functional, r.log_gamma_bracket_sum);
  return r;
}

double LocalizationBound::at(double c) const {
  const double s = gradient_sum();
  return (gap + horizon * alpha_difference) * std::exp(c * horizon * s * s + 1.0);
}

LocalizationBound localization_bound(const JumpModel& m, const Region& g1, const Region& g2, double horizon,
                                     double c_universal, double gap, const Grid& grid,
                                     const QuadratureOptions& quad) {
  LocalizationBound b;
  b.horizon = horizon;
  b.c_universal = c_universal;
  b.gap = gap;
  const Region diff = m.measure().resolve(g2).difference(m.measure().resolve(g1));
  b.alpha_difference = diff.is_empty() ? 0.0 : alpha_of(m, diff, grid, quad);
  // Only the first-order coefficient norms are needed here.
  const CoefficientDerivatives der(m.coefficients());
  for (const auto& a : multi_indices(m.dim(), 1)) {
    double s_sup = 0.0, b_sup = 0.0;
    for (double t : grid.times)
      for (const auto& x : grid.states) {
        double s2 = 0.0;
        for (std::size_t l = 0; l < der.diffusion_columns(); ++l) {
          const Vec v = der.diffusion(l, a, t, x);
          s2 += v.dot(v);
        }
        s_sup = std::max(s_sup, std::sqrt(s2));
        if (m.coefficients().drift) b_sup = std::max(b_sup, der.drift(a, t, x).norm());
      }
    b.sigma_grad += s_sup;
    b.drift_grad += b_sup;
  }
  const auto cm = c_mu(m, grid, quad);
  b.c_mu = cm.value;
  b.c_mu_estimated = cm.estimated;
  b.value = b.at(c_universal);
  return b;
}

double calibrate_universal_constant(const LocalizationBound& b, double empirical) {
  const double base = b.gap + b.horizon * b.alpha_difference;
  if (empirical <= base * std::exp(1.0)) return 0.0;
  const double s = b.gradient_sum();
  if (base <= 0.0 || s <= 0.0)
    throw Error(ErrorCode::DegenerateFit, "no finite constant makes the bound dominate the estimate");
  return (std::log(empirical / base) - 1.0) / (b.horizon * s * s);
}

}  // namespace hybridjump
