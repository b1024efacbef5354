// One line per acceptance criterion; exit status is the number of failures.
// Usage: acceptance [A1 A2 ...]   (no arguments runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hybridjump/boltzmann.hpp"
#include "hybridjump/bounds.hpp"
#include "hybridjump/reference.hpp"
#include "hybridjump/regimes.hpp"
#include "hybridjump/simulate.hpp"
#include "hybridjump/weakerr.hpp"

using namespace hybridjump;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// --- A1 ------------------------------------------------------------------------

Outcome a1() {
  ThreeRegimeConfig cfg;
  cfg.paths = 200000;
  cfg.step = 1e-3;
  cfg.horizon = 1.0;
  cfg.x0 = -1.0;
  cfg.seed = 1;
  const auto rep =
      three_regime_experiment(ThreeRegimeExample::standard(0.02), sine_function(), cfg, {0.02, 0.01, 0.005, 0.0025});
  bool narrow = true;
  std::string rows;
  for (const auto& r : rep.rows) {
    const double width = r.error.ci_high - r.error.ci_low;
    narrow = narrow && width < 0.5 * r.error.estimate;
    rows += fmt(" eps=%g err=%.3e w/err=%.2f", r.parameter, r.error.estimate, width / r.error.estimate);
  }
  const bool rate = rep.fit.slope >= 0.4 && rep.fit.slope <= 0.65;
  return {rate && narrow, fmt("rate=%.3f (need [0.4,0.65]);", rep.fit.slope) + rows};
}

// --- A2 ------------------------------------------------------------------------

Outcome a2() {
  const JumpModel m = discrete_toy({}, 1.0);
  const Observable id = [](const Vec& x) { return x[0]; };
  SimConfig s;
  s.horizon = 1.0;
  s.paths = 10000;
  s.record = false;
  int ks_pass = 0;
  std::vector<double> pa, pb;
  std::string ps;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    s.seed = 2 * seed;
    s.representation = Representation::Fictive;
    const auto a = terminal_samples(m, Region::all(), Vec{0.3}, id, s, 0);
    s.seed = 2 * seed + 1;
    s.representation = Representation::Real;
    const auto b = terminal_samples(m, Region::all(), Vec{0.3}, id, s, 0);
    const double p = ks_two_sample(a, b).p_value;
    ks_pass += p > 0.01;
    ps += fmt(" %.3f", p);
    pa.insert(pa.end(), a.begin(), a.end());
    pb.insert(pb.end(), b.begin(), b.end());
  }
  // moments on the pooled samples of all seeds
  const auto ma = raw_moments(pa), mb = raw_moments(pb);
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double se = std::hypot(ma.std_error[k], mb.std_error[k]);
    worst = std::max(worst, std::abs(ma.mean[k] - mb.mean[k]) / se);
  }
  return {ks_pass >= 4 && worst <= 3.0,
          fmt("KS passes %d/5 (p:%s); max moment gap %.2f combined SE", ks_pass, ps.c_str(), worst)};
}

// --- A3 ------------------------------------------------------------------------

Outcome a3() {
  DiscreteToy toy;
  toy.rate_bound = 3.0;
  toy.constant_rate = 1.2;
  const JumpModel m = discrete_toy(toy, 1.5);
  SimConfig s;
  s.horizon = 1.5;
  s.paths = 10000;
  s.record = false;
  s.seed = 31;
  std::vector<std::uint64_t> prop, acc;
  for (std::size_t i = 0; i < s.paths; ++i) {
    RngStream rng(s.seed, i);
    const auto p = simulate(m, Region::all(), Vec{0.0}, 0.0, s, rng);
    prop.push_back(p.proposals);
    acc.push_back(p.accepted);
  }
  const double mu = m.measure().total_mass();
  const auto rp = chi_square_poisson(prop, 2.0 * 3.0 * mu * 1.5);
  const auto ra = chi_square_poisson(acc, 1.2 * mu * 1.5);
  return {rp.p_value > 0.01 && ra.p_value > 0.01,
          fmt("proposals vs Poisson(%g) p=%.3f; accepted vs Poisson(%g) p=%.3f", 2.0 * 3.0 * mu * 1.5, rp.p_value,
              1.2 * mu * 1.5, ra.p_value)};
}

// --- A4 ------------------------------------------------------------------------

Outcome a4() {
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& nm : reference_models(1.0))
    for (int i = 0; i < 10; ++i)
      for (int k = 0; k < 10; ++k) {
        const auto km = real_shock_kernel(nm.model, nm.region, 0.1 * i, Vec{-2.0 + 4.0 * k / 9.0});
        worst = std::max(worst, std::abs(km.sentinel + km.jump - 1.0));
        ++n;
      }
  return {worst <= 1e-10, fmt("max |mass - 1| = %.2e over %zu points", worst, n)};
}

// --- A5 ------------------------------------------------------------------------

Outcome a5() {
  const double floor = 1e-6;
  const auto ex = ThreeRegimeExample::standard(0.02);
  const JumpModel m = ex.limit_truncated(1.0, floor);
  const Region g2 = ex.limit_truncated_region(floor);
  SimConfig s;
  s.horizon = 1.0;
  s.step = 1e-3;
  s.paths = 4000;
  s.seed = 5;
  s.record = false;
  const Grid grid = Grid::lattice(1, -3.0, 3.0, 13);
  std::vector<double> emp;
  std::vector<LocalizationBound> bounds;
  for (double eps : {0.02, 0.01, 0.005}) {
    const Region g1 = Region::interval(4.0 * eps, 1.0);
    const auto gaps = coupled_sup_gaps(m, g1, g2, Vec{0.0}, Vec{0.0}, s, 0);
    double mean = 0.0;
    for (double g : gaps) mean += g;
    emp.push_back(mean / double(gaps.size()));
    bounds.push_back(localization_bound(m, g1, g2, 1.0, 1.0, 0.0, grid));
  }
  const double c = calibrate_universal_constant(bounds[0], emp[0]);
  bool below = true, monotone = true;
  std::string rows;
  for (std::size_t i = 0; i < emp.size(); ++i) {
    const double b = bounds[i].at(c);
    below = below && emp[i] <= b;
    if (i > 0) monotone = monotone && emp[i] <= emp[i - 1];
    rows += fmt(" [%.3e <= %.3e]", emp[i], b);
  }
  return {below && monotone, fmt("C=%g monotone=%d empirical vs bound:", c, int(monotone)) + rows};
}

// --- A6, A7 --------------------------------------------------------------------

std::vector<BoltzmannParams> first_order_grid() {
  std::vector<BoltzmannParams> g;
  for (double d : {0.4, 0.2, 0.1}) g.push_back(BoltzmannParams::first_order(0.3, 0.1, d));
  return g;
}

Outcome a6() {
  const auto grid_p = first_order_grid();
  const ParticleEnsemble ens = initial_ensemble(grid_p[0], 64, RngStream(7, 0));
  const Grid grid = Grid::lattice(2, -2.0, 2.0, 5);
  const TestFunction f = gaussian_bump();
  std::vector<double> ratio;
  std::string rows;
  for (const auto& p : grid_p) {
    const BoltzmannModel m(p);
    const double d = generator_distance(cutoff_generator(m, ens), hybrid_generator(m, ens, 1), f, grid, 2);
    ratio.push_back(d / std::pow(p.delta, 2.0 - p.nu));
    rows += fmt(" delta=%g ratio=%.4f", p.delta, ratio.back());
  }
  const double spread = *std::max_element(ratio.begin(), ratio.end()) / *std::min_element(ratio.begin(), ratio.end());
  return {spread < 3.0, fmt("spread %.3f (need < 3);", spread) + rows};
}

Outcome a7() {
  BoltzmannExperimentConfig cfg;
  cfg.particles = 2000;
  cfg.replicas = 200;
  cfg.horizon = 0.5;
  const auto rep = boltzmann_experiment(first_order_grid(), gaussian_bump(), cfg);
  bool decreasing = true, stable = true;
  std::string rows;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    if (i > 0) decreasing = decreasing && r.error.ci_high < rep.rows[i - 1].error.ci_low;
    stable = stable && r.fourth_moment_drift <= 2.0;
    rows += fmt(" delta=%g err=%.3e [%.3e,%.3e] m4x%.3f", r.delta, r.error.estimate, r.error.ci_low,
                r.error.ci_high, r.fourth_moment_drift);
  }
  return {decreasing && stable, fmt("disjoint decrease=%d moment-stable=%d;", int(decreasing), int(stable)) + rows};
}

// --- A8 ------------------------------------------------------------------------

Outcome a8() {
  const auto ex = ThreeRegimeExample::standard(0.01);
  const auto mu = ex.source_measure();
  const double bal = mu.integrate([&](double z) { return ex.shape(z); }, Region::interval(0.01, 0.03));
  const JumpModel src = ex.source(1.0);
  const auto split = ex.split();
  double worst = 0.0;
  for (double x : {-2.0, -0.5, 0.0, 0.7, 1.5}) {
    const double c = ex.c(x), g = ex.gamma(x);
    const double s2 = regime_covariance(src, split.a, 0.0, Vec{x}, {})(0, 0);
    const double b = regime_drift(src, split.b, 0.0, Vec{x}, {})[0];
    worst = std::max(worst, std::abs(s2 / (ThreeRegimeExample::beta1_squared() * c * c * g) - 1.0));
    worst = std::max(worst, std::abs(b / (std::log(4.0 / 3.0) * c * g) - 1.0));
  }
  const double b1 = ThreeRegimeExample::beta1(), b2 = ThreeRegimeExample::beta2(), al = ThreeRegimeExample::alpha();
  const bool constants = std::abs(b1 - 0.73587) < 5e-6 && std::abs(b2 - 0.28768) < 5e-6 && std::abs(al - 0.44302) < 5e-6;
  return {std::abs(bal) <= 1e-10 && worst <= 1e-8 && constants,
          fmt("balance %.1e; moment rel err %.1e; beta1=%.6f beta2=%.6f alpha=%.6f", bal, worst, b1, b2, al)};
}

// --- A9 ------------------------------------------------------------------------

Outcome a9() {
  const JumpModel m = discrete_toy({}, 1.0);
  const Grid grid = Grid::lattice(1, -2.0, 2.0, 9, {0.0, 0.5});
  RegularityOptions o;
  o.q = 1;
  o.workers = 1;
  const auto r1 = regularity_report(m, Region::all(), grid, o);
  const auto r2 = regularity_report(m, Region::all(), grid, o);
  o.workers = 3;
  const auto r3 = regularity_report(m, Region::all(), grid, o);
  const std::string s1 = r1.to_json().dump(), s2 = r2.to_json().dump(), s3 = r3.to_json().dump();
  const int q = r1.q, pq = 4 * q * q;
  const double la = log_alpha_from(r1.c_universal, q, r1.horizon, r1.theta_at(q, r1.p), r1.a_at(r1.p));
  const double laq = log_alpha_from(r1.c_universal, q, r1.horizon, r1.theta_at(q, pq), r1.a_at(pq));
  const double lq =
      log_Q_from(r1.c_universal, q, r1.horizon, laq, r1.gamma_functional, r1.log_gamma_bracket_sum);
  const bool recompose = la == r1.log_alpha && laq == r1.log_alpha_q && lq == r1.log_Q;
  return {recompose && s1 == s2 && s1 == s3,
          fmt("recomposition exact=%d; identical across runs=%d, across workers=%d", int(recompose), int(s1 == s2),
              int(s1 == s3))};
}

// --- A10 -----------------------------------------------------------------------

// (1/n) sum_j int_{|theta|<=delta} F(theta, w_j) gamma(|w_j|) |theta|^{-1-nu} dtheta, w_j = v - u_j,
// integrated separately on each sign of theta.
template <class F>
double brute(const BoltzmannModel& m, const Velocity& v, const ParticleEnsemble& e, F&& integrand) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double nu = m.params().nu, delta = m.params().delta;
  double s = 0.0;
  for (const auto& u : e) {
    const double w0 = v[0] - u[0], w1 = v[1] - u[1];
    const double g = m.kernel().gamma(std::hypot(w0, w1));
    // |theta|^{-1-nu} split so that nodes near 0 do not overflow
    auto h = [&](double th) {
      const double a = std::abs(th);
      return integrand(th, w0, w1) / a * g * std::pow(a, -nu);
    };
    s += ts.integrate(h, 0.0, delta, 1e-14) + ts.integrate([&](double t) { return h(-t); }, 0.0, delta, 1e-14);
  }
  return s / double(e.size());
}

Outcome a10() {
  const ParticleEnsemble ens{{0.3, -1.1}, {-0.8, 0.4}, {1.6, 0.9}};
  const std::vector<Velocity> vs{{0.0, 0.0}, {0.5, -0.2}, {-1.3, 2.1}};
  double worst = 0.0;
  // jump A(theta) w with A = (R_theta - I) / 2
  auto jump = [](double th, double w0, double w1, int i) {
    const double c = std::cos(th) - 1.0, s = std::sin(th);
    return i == 0 ? 0.5 * (c * w0 - s * w1) : 0.5 * (s * w0 + c * w1);
  };
  // one constant and one speed-dependent kernel
  for (double delta : {0.4, 0.01}) {
    const BoltzmannModel m(BoltzmannParams::first_order(0.3, 0.1, delta));
    for (const auto& v : vs) {
      const Velocity b = drift_delta(m, v, ens);
      const auto d = diffusion_delta(m, v, ens);
      double scale_b = 0.0, scale_a = 0.0, eb = 0.0, ea = 0.0;
      for (int i = 0; i < 2; ++i) {
        const double ob = brute(m, v, ens, [&](double th, double w0, double w1) { return jump(th, w0, w1, i); });
        eb = std::max(eb, std::abs(b[i] - ob));
        scale_b = std::max(scale_b, std::abs(ob));
        for (int j = 0; j < 2; ++j) {
          const double oa = brute(m, v, ens, [&](double th, double w0, double w1) {
            return jump(th, w0, w1, i) * jump(th, w0, w1, j);
          });
          ea = std::max(ea, std::abs(d.a(i, j) - oa));
          scale_a = std::max(scale_a, std::abs(oa));
        }
      }
      worst = std::max({worst, eb / scale_b, ea / scale_a});
    }
  }
  // cutoff function at eps = 0.01, Gamma = (ln 100)^0.75
  BoltzmannParams p = BoltzmannParams::first_order(0.3, 0.1, 0.1, 0.75);
  p.r = std::log(0.01) / std::log(p.delta);
  const CutoffFunction phi(p.epsilon(), p.gamma_eps());
  double ephi = 0.0;
  for (double x : {0.05, 0.5, 1.0, 2.5}) ephi = std::max(ephi, std::abs(phi(x) - x));
  for (double x : {0.0, 0.004, 0.01}) ephi = std::max(ephi, std::abs(phi(x) - 0.02));
  for (double x : {p.gamma_eps() + 0.011, 10.0, 1e6}) ephi = std::max(ephi, std::abs(phi(x) - p.gamma_eps()));
  // theta mass against quadrature
  boost::math::quadrature::tanh_sinh<double> ts;
  double emass = 0.0;
  for (double nu : {0.1, 0.3, 0.49})
    for (auto [lo, hi] : {std::pair{1e-3, 0.1}, {0.1, 1.5}, {0.4, 3.14159}}) {
      const double q = 2.0 * ts.integrate([nu](double t) { return std::pow(t, -1.0 - nu); }, lo, hi, 1e-15);
      emass = std::max(emass, std::abs(theta_region_mass(nu, lo, hi) / q - 1.0));
    }
  return {worst <= 1e-8 && ephi <= 1e-12 && emass <= 1e-10,
          fmt("drift/diffusion rel err %.1e; phi err %.1e; theta mass rel err %.1e", worst, ephi, emass)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  const std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, fn] : all) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-4s %s  %s  (%.1fs)\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), sec);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures;
}
