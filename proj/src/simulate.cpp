#include "hybridjump/simulate.hpp"

#include <cmath>
#include <exception>
#include <sstream>
#include <string>

#include <omp.h>

#include "hybridjump/error.hpp"

namespace hybridjump {

void SimConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (!(step > 0.0) || step > horizon) throw Error(ErrorCode::InvalidArgument, "flow step must lie in (0, T]");
  if (paths < 1) throw Error(ErrorCode::InvalidArgument, "need at least one path");
}

int default_workers() { return omp_get_max_threads(); }

namespace {

std::string state_str(const Vec& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ")";
  return os.str();
}

std::size_t noise_dim(const CoefficientSet& c) {
  if (!c.diffusion.empty()) return c.diffusion.size();
  return c.covariance ? c.dim : 0;
}

// One Euler step with the supplied standard normals xi (already drawn).
Vec euler_step(const CoefficientSet& c, const Vec& x, double t, double dt, const double* xi) {
  Vec nx = x;
  if (c.drift) nx += c.drift(t, x) * dt;
  const double sq = std::sqrt(dt);
  if (!c.diffusion.empty()) {
    for (std::size_t l = 0; l < c.diffusion.size(); ++l) nx += c.diffusion[l](t, x) * (xi[l] * sq);
  } else if (c.covariance) {
    const Mat r = psd_sqrt(c.covariance(t, x));
    Vec w(c.dim);
    for (std::size_t i = 0; i < c.dim; ++i) w[i] = xi[i] * sq;
    nx += r * w;
  }
  if (!nx.finite())
    throw Error(ErrorCode::NonFiniteCoefficient, "flow left the finite range from x=" + state_str(x) +
                                                     " at t=" + std::to_string(t));
  return nx;
}

struct Dominating {
  MarkMeasure::Sampler sampler;
  double bound;  // Gamma'
  double rate;   // 2 Gamma' mu(G)
  std::vector<Atom> atoms;  // discrete measures: mu restricted to G
};

Dominating dominating(const JumpModel& m, const Region& g, const SimConfig& cfg) {
  Dominating d{m.measure().sampler(g), cfg.dominating_bound.value_or(m.coefficients().rate_bound), 0.0, {}};
  if (m.measure().kind() == MarkMeasure::Kind::Discrete) d.atoms = m.measure().restricted(g).atoms();
  if (d.bound < m.coefficients().rate_bound)
    throw Error(ErrorCode::InvalidArgument, "dominating bound below the model's rate bound");
  d.rate = 2.0 * d.bound * d.sampler.mass();
  return d;
}

double checked_rate(const CoefficientSet& c, double t, double z, const Vec& x) {
  const double g = c.gamma(t, z, x);
  if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteCoefficient, "gamma not finite at x=" + state_str(x));
  if (g < 0.0 || g > c.rate_bound * (1.0 + 1e-12))
    throw Error(ErrorCode::RateBoundViolated, "gamma=" + std::to_string(g) + " outside [0, Gamma] at x=" +
                                                  state_str(x));
  return g;
}

PathRecord run(const JumpModel& m, const Region& g, const Vec& x0, double t0, const SimConfig& cfg,
               RngStream& rng, Representation rep) {
  cfg.validate();
  if (x0.size() != m.dim()) throw Error(ErrorCode::InvalidArgument, "initial state has the wrong dimension");
  const auto& c = m.coefficients();
  const Dominating dom = dominating(m, g, cfg);

  PathRecord rec;
  rec.seed = rng.seed();
  rec.stream = rng.stream();
  rec.representation = rep;
  rec.t0 = t0;
  rec.initial = x0;

  Vec x = x0;
  double t = t0;
  const double T = cfg.horizon;
  while (true) {
    const double tn = dom.rate > 0.0 ? t + rng.exponential(dom.rate) : kInf;
    if (tn > T) {
      x = flow_segment(m, x, t, T, cfg.step, rng);
      break;
    }
    x = flow_segment(m, x, t, tn, cfg.step, rng);
    double z = 0.0, u = 0.0;
    bool accept = false;
    if (rep == Representation::Real && !dom.atoms.empty()) {
      // Direct draw from q_G: atom z_k with mass gamma(z_k) w_k / (2 Gamma mu(G)),
      // the remaining Theta_G on the sentinel.
      const double v = rng.uniform(), scale = 1.0 / dom.rate;
      double cum = 0.0;
      for (const auto& a : dom.atoms) {
        if (a.weight == 0.0) continue;
        cum += checked_rate(c, tn, a.value, x) * a.weight * scale;
        if (v < cum) {
          z = a.value;
          accept = true;
          break;
        }
      }
    } else {
      z = dom.sampler.draw(rng);
      u = rng.uniform(0.0, 2.0 * dom.bound);
      accept = u <= checked_rate(c, tn, z, x);
    }
    const Vec before = x;
    if (accept) {
      const Vec jump = c.c(tn, z, x);
      if (!jump.finite()) throw Error(ErrorCode::NonFiniteCoefficient, "jump amplitude not finite at x=" + state_str(x));
      x += jump;
      ++rec.accepted;
    }
    ++rec.proposals;
    if (cfg.record) {
      if (rep == Representation::Real)
        rec.events.push_back({tn, accept ? z : 0.0, !accept, std::nan(""), accept, before, x});
      else
        rec.events.push_back({tn, z, false, u, accept, before, x});
    }
    t = tn;
  }
  rec.terminal = x;
  return rec;
}

}  // namespace

Vec flow_segment(const JumpModel& m, Vec x, double t0, double t1, double h, RngStream& rng) {
  const auto& c = m.coefficients();
  if (!c.has_flow() || !(t1 > t0)) return x;
  const std::size_t k = noise_dim(c);
  double xi[kMaxDim * 4];
  if (k > sizeof(xi) / sizeof(xi[0])) throw Error(ErrorCode::InvalidArgument, "too many diffusion columns");
  double t = t0;
  while (t < t1) {
    const double dt = std::min(h, t1 - t);
    for (std::size_t l = 0; l < k; ++l) xi[l] = rng.normal();
    x = euler_step(c, x, t, dt, xi);
    t = (t1 - t <= h) ? t1 : t + h;
  }
  return x;
}

PathRecord simulate_fictive(const JumpModel& m, const Region& g, const Vec& x, double t0, const SimConfig& cfg,
                            RngStream& rng) {
  return run(m, g, x, t0, cfg, rng, Representation::Fictive);
}

// The kernel q_G puts mass Theta_G on the sentinel and density
// gamma/(2 Gamma mu(G)) on G. Discrete marks are drawn from it directly by
// inversion; for densities, z ~ mu|G/mu(G) kept iff U <= gamma(z) with
// U ~ U[0, 2 Gamma] realizes it exactly.
PathRecord simulate_real(const JumpModel& m, const Region& g, const Vec& x, double t0, const SimConfig& cfg,
                         RngStream& rng) {
  return run(m, g, x, t0, cfg, rng, Representation::Real);
}

PathRecord simulate_hybrid(const JumpModel& m, const Region& g, const Vec& x, double t0, const SimConfig& cfg,
                           RngStream& rng) {
  return run(m, g, x, t0, cfg, rng, Representation::Hybrid);
}

PathRecord simulate(const JumpModel& m, const Region& g, const Vec& x, double t0, const SimConfig& cfg,
                    RngStream& rng) {
  return run(m, g, x, t0, cfg, rng, cfg.representation);
}

std::vector<double> terminal_samples(const JumpModel& m, const Region& g, const Vec& x, const Observable& f,
                                     const SimConfig& cfg, int workers) {
  cfg.validate();
  SimConfig quiet = cfg;
  quiet.record = false;
  const long n = static_cast<long>(cfg.paths);
  std::vector<double> out(cfg.paths);
  std::vector<std::exception_ptr> errors(cfg.paths);
  bool any_error = false;
#pragma omp parallel for schedule(dynamic, 64) num_threads(workers > 0 ? workers : default_workers())
  for (long i = 0; i < n; ++i) {
    try {
      RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      out[i] = f(simulate(m, g, x, 0.0, quiet, rng).terminal);
    } catch (...) {
      errors[i] = std::current_exception();
#pragma omp atomic write
      any_error = true;
    }
  }
  if (any_error) {
    for (long i = 0; i < n; ++i) {
      if (!errors[i]) continue;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const Error& e) {
        throw Error(e.code(), "path " + std::to_string(i) + ": " + e.what());
      }
    }
  }
  return out;
}

std::vector<double> terminal_samples_serial(const JumpModel& m, const Region& g, const Vec& x,
                                            const Observable& f, const SimConfig& cfg) {
  cfg.validate();
  SimConfig quiet = cfg;
  quiet.record = false;
  std::vector<double> out(cfg.paths);
  for (std::size_t i = 0; i < cfg.paths; ++i) {
    RngStream rng(cfg.seed, i);
    try {
      out[i] = f(simulate(m, g, x, 0.0, quiet, rng).terminal);
    } catch (const Error& e) {
      throw Error(e.code(), "path " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

CoupledPath simulate_coupled(const JumpModel& m, const Region& g1, const Region& g2, const Vec& x1,
                             const Vec& x2, double t0, const SimConfig& cfg, RngStream& rng) {
  cfg.validate();
  const auto& c = m.coefficients();
  const Dominating dom = dominating(m, g2, cfg);
  const Region inner = m.measure().resolve(g1);
  const bool by_index = m.measure().kind() == MarkMeasure::Kind::Discrete;
  const auto& atoms = m.measure().atoms();
  auto in_g1 = [&](double z) {
    if (!by_index || inner.kind() != Region::Kind::Indices) return inner.contains(z);
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (atoms[i].value == z) return inner.contains_index(i);
    return false;
  };
  const std::size_t k = noise_dim(c);
  double xi[kMaxDim * 4];

  CoupledPath out;
  Vec a = x1, b = x2;
  out.sup_gap = (a - b).norm();
  double t = t0;
  const double T = cfg.horizon;
  auto flow_both = [&](double t1) {
    if (!c.has_flow()) return;
    double s = t;
    while (s < t1) {
      const double dt = std::min(cfg.step, t1 - s);
      for (std::size_t l = 0; l < k; ++l) xi[l] = rng.normal();
      a = euler_step(c, a, s, dt, xi);
      b = euler_step(c, b, s, dt, xi);
      out.sup_gap = std::max(out.sup_gap, (a - b).norm());
      s = (t1 - s <= cfg.step) ? t1 : s + cfg.step;
    }
  };
  while (true) {
    const double tn = dom.rate > 0.0 ? t + rng.exponential(dom.rate) : kInf;
    if (tn > T) {
      flow_both(T);
      break;
    }
    flow_both(tn);
    const double z = dom.sampler.draw(rng);
    const double u = rng.uniform(0.0, 2.0 * dom.bound);
    if (in_g1(z) && u <= checked_rate(c, tn, z, a)) a += c.c(tn, z, a);
    if (u <= checked_rate(c, tn, z, b)) b += c.c(tn, z, b);
    out.sup_gap = std::max(out.sup_gap, (a - b).norm());
    t = tn;
  }
  out.terminal1 = a;
  out.terminal2 = b;
  return out;
}

std::vector<double> coupled_sup_gaps(const JumpModel& m, const Region& g1, const Region& g2, const Vec& x1,
                                     const Vec& x2, const SimConfig& cfg, int workers) {
  cfg.validate();
  const long n = static_cast<long>(cfg.paths);
  std::vector<double> out(cfg.paths);
  std::vector<std::exception_ptr> errors(cfg.paths);
#pragma omp parallel for schedule(dynamic, 64) num_threads(workers > 0 ? workers : default_workers())
  for (long i = 0; i < n; ++i) {
    try {
      RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      out[i] = simulate_coupled(m, g1, g2, x1, x2, 0.0, cfg, rng).sup_gap;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (long i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
  return out;
}

}  // namespace hybridjump
