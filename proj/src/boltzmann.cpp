#include "hybridjump/boltzmann.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>

#include <omp.h>

#include "hybridjump/error.hpp"
#include "hybridjump/simulate.hpp"

namespace hybridjump {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr std::uint64_t kInitDomain = 1, kLargeDomain = 2, kSmallDomain = 3, kNoiseDomain = 4;

const GaussLegendre& gl64() {
  static const GaussLegendre gl(64);
  return gl;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ParameterConstraintViolated, what);
}

double cos_minus_one(double t) {
  const double s = std::sin(0.5 * t);
  return -2.0 * s * s;
}

}  // namespace

// --- parameters ------------------------------------------------------------

double BoltzmannParams::second_order_r_max(double nu, double kappa) {
  return std::min({(1.0 - nu) / (2.0 - kappa), (1.0 - 0.5 * nu) / (2.0 - 0.5 * kappa),
                   (3.0 - 4.0 * nu) / (4.0 + kappa)});
}

BoltzmannParams BoltzmannParams::first_order(double nu, double kappa, double delta, double eta0) {
  BoltzmannParams p;
  p.nu = nu;
  p.kappa = kappa;
  p.delta = delta;
  p.eta0 = eta0;
  p.r = first_order_r(nu, kappa);
  p.order = 1;
  return p;
}

BoltzmannParams BoltzmannParams::second_order(double nu, double kappa, double delta, double eta0) {
  BoltzmannParams p = first_order(nu, kappa, delta, eta0);
  p.r = 0.9 * second_order_r_max(nu, kappa);
  p.order = 2;
  return p;
}

double BoltzmannParams::epsilon() const { return std::pow(delta, r); }
double BoltzmannParams::gamma_eps() const { return std::pow(std::log(1.0 / epsilon()), eta0); }

double BoltzmannParams::theoretical_exponent() const {
  if (order == 1) return (2.0 - 3.0 * nu) * (1.0 + kappa) / (3.0 + kappa);
  return r * (1.0 + kappa);
}

void BoltzmannParams::validate() const {
  require(nu > 0.0 && nu < 1.0, "nu must lie in (0,1)");
  require(kappa > 0.0 && kappa <= 1.0, "kappa must lie in (0,1]");
  require(tail_exponent > 0.0, "tail exponent must be positive");
  require(eta0 > 1.0 / tail_exponent && eta0 < 1.0 / std::max(kappa, nu), "eta0 must lie in (1/s, 1/max(kappa,nu))");
  require(delta > 0.0 && std::isfinite(delta), "delta must be positive");
  require(r > 0.0, "r must be positive");
  const double e = epsilon();
  require(e > 0.0 && e < 1.0, "epsilon = delta^r must lie in (0,1)");
  const double g = gamma_eps();
  require(g > 0.0 && std::isfinite(g), "Gamma_eps must be positive");
  require(theta_floor > 0.0 && theta_floor < kHalfPi, "theta_floor must lie in (0, pi/2)");
  require(step > 0.0, "step must be positive");
  require(initial_std > 0.0, "initial_std must be positive");
  require(checkpoints >= 1, "checkpoints must be >= 1");
  if (order == 1) {
    require(kappa < 0.125, "first order needs kappa < 1/8");
    require(nu < 0.5, "first order needs nu < 1/2");
  } else if (order == 2) {
    require(kappa <= 1.0 / 18.0, "second order needs kappa <= 1/18");
    require(r < second_order_r_max(nu, kappa), "second order needs r below its admissible bound");
  } else {
    require(false, "order must be 1 or 2");
  }
}

// --- cutoff function -------------------------------------------------------

double bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

double bump_normalizer() {
  static const double z = gl64().integrate(bump, -1.0, 1.0);
  return z;
}

CutoffFunction::CutoffFunction(double eps, double gamma_eps, std::size_t table_nodes)
    : eps_(eps), lower_(2.0 * eps), upper_(gamma_eps) {
  if (!(eps > 0.0) || !(gamma_eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff needs eps, Gamma > 0");
  if (constant() || table_nodes < 2) return;
  // Transition windows [eps, 3eps] and [Gamma - eps, Gamma + eps].
  const double a1 = eps_, b1 = 3.0 * eps_, a2 = upper_ - eps_, b2 = upper_ + eps_;
  if (a2 <= b1) {
    tables_.resize(1);
    build(tables_[0], a1, b2, table_nodes);
  } else {
    tables_.resize(2);
    build(tables_[0], a1, b1, table_nodes);
    build(tables_[1], a2, b2, table_nodes);
  }
}

void CutoffFunction::build(Table& t, double a, double b, std::size_t n) const {
  t.lo = a;
  t.h = (b - a) / double(n);
  t.value.resize(n + 1);
  t.slope.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double x = a + t.h * double(k);
    t.value[k] = exact(x);
    t.slope[k] = exact_derivative(x);
  }
}

double CutoffFunction::Table::eval(double x) const {
  const std::size_t last = value.size() - 1;
  const double s = (x - lo) / h;
  std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(s), last - 1);
  const double u = s - double(k), u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * value[k] + (u3 - 2 * u2 + u) * h * slope[k] + (-2 * u3 + 3 * u2) * value[k + 1] +
         (u3 - u2) * h * slope[k + 1];
}

double CutoffFunction::exact(double x) const {
  if (constant()) return upper_;
  if (x <= eps_) return lower_;
  if (x >= upper_ + eps_) return upper_;
  if (x >= 3.0 * eps_ && x <= upper_ - eps_) return x;
  // y = x - eps s: y > Gamma for s < sb, y < 2eps for s > sa
  const double sb = std::clamp((x - upper_) / eps_, -1.0, 1.0);
  const double sa = std::clamp((x - lower_) / eps_, -1.0, 1.0);
  const auto& gl = gl64();
  double v = 0.0;
  if (sb > -1.0) v += upper_ * gl.integrate(bump, -1.0, sb);
  if (sa > sb) v += gl.integrate([&](double s) { return (x - eps_ * s) * bump(s); }, sb, sa);
  if (sa < 1.0) v += lower_ * gl.integrate(bump, sa, 1.0);
  return v / bump_normalizer();
}

double CutoffFunction::exact_derivative(double x) const {
  if (constant() || x <= eps_ || x >= upper_ + eps_) return 0.0;
  if (x >= 3.0 * eps_ && x <= upper_ - eps_) return 1.0;
  const double sb = std::clamp((x - upper_) / eps_, -1.0, 1.0);
  const double sa = std::clamp((x - lower_) / eps_, -1.0, 1.0);
  if (sa <= sb) return 0.0;
  return gl64().integrate(bump, sb, sa) / bump_normalizer();
}

double CutoffFunction::operator()(double x) const {
  if (constant()) return upper_;
  if (x <= eps_) return lower_;
  if (x >= upper_ + eps_) return upper_;
  if (x >= 3.0 * eps_ && x <= upper_ - eps_) return x;
  for (const auto& t : tables_)
    if (t.covers(x)) return t.eval(x);
  return exact(x);
}

double cutoff_phi(const BoltzmannParams& p, double x) {
  return CutoffFunction(p.epsilon(), p.gamma_eps(), 0).exact(x);
}

CollisionKernel::CollisionKernel(const BoltzmannParams& p)
    : phi_(p.epsilon(), p.gamma_eps()), kappa_(p.kappa), bound_(2.0 * std::pow(p.gamma_eps(), p.kappa)) {}

double CollisionKernel::gamma(double speed) const { return std::pow(phi_(speed), kappa_); }

// --- angular measure -------------------------------------------------------

double theta_region_mass(double nu, double lo, double hi) {
  if (hi <= lo) return 0.0;
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return (2.0 / nu) * (std::pow(lo, -nu) - std::pow(hi, -nu));
}

double sample_theta(double nu, double lo, double hi, RngStream& rng) {
  double mag = lo;
  const double u = rng.uniform();
  if (hi > lo) {
    const double a = std::pow(lo, -nu), b = std::pow(hi, -nu);
    mag = std::pow(a - u * (a - b), -1.0 / nu);
    mag = std::clamp(mag, lo, hi);
  }
  return rng.uniform() < 0.5 ? -mag : mag;
}

Velocity collision_jump(double theta, const Velocity& v, const Velocity& v_star) {
  const double w0 = v[0] - v_star[0], w1 = v[1] - v_star[1];
  const double cm = cos_minus_one(theta), s = std::sin(theta);
  return {0.5 * (cm * w0 - s * w1), 0.5 * (s * w0 + cm * w1)};
}

ThetaMoments theta_moments(double nu, double delta, const QuadratureOptions& quad) {
  if (!(delta > 0.0) || delta > kHalfPi + 1e-15)
    throw Error(ErrorCode::InvalidArgument, "theta_moments needs 0 < delta <= pi/2");
  const auto v = integrate_many(
      [nu](double t, std::span<double> out) {
        // written with sin(x)/x factors so tiny t neither overflows nor loses digits
        const double p = std::pow(t, 1.0 - nu);
        const double h = t == 0.0 ? 0.5 : std::sin(0.5 * t) / t, s = t == 0.0 ? 1.0 : std::sin(t) / t;
        out[0] = -4.0 * h * h * p;   // both signs
        out[1] = 8.0 * h * h * h * h * p * t * t;
        out[2] = 2.0 * s * s * p;
      },
      3, 0.0, delta, quad);
  return {v[0], v[1], v[2]};
}

BoltzmannModel::BoltzmannModel(const BoltzmannParams& p)
    : p_((p.validate(), p)), kernel_(p), moments_(theta_moments(p.nu, std::min(p.delta, kHalfPi))) {}

// --- small-angle coefficients ----------------------------------------------

Velocity drift_delta(const BoltzmannModel& m, const Velocity& v, std::span<const Velocity> ensemble) {
  if (ensemble.empty()) throw Error(ErrorCode::EmptySample, "drift needs a nonempty ensemble");
  double b0 = 0.0, b1 = 0.0;
  for (const auto& u : ensemble) {
    const double w0 = v[0] - u[0], w1 = v[1] - u[1];
    const double g = m.kernel().gamma(std::hypot(w0, w1));
    b0 += g * w0;
    b1 += g * w1;
  }
  const double k = 0.5 * m.moments().i1 / double(ensemble.size());
  return {k * b0, k * b1};
}

DiffusionDelta diffusion_delta(const BoltzmannModel& m, const Velocity& v, std::span<const Velocity> ensemble) {
  if (ensemble.empty()) throw Error(ErrorCode::EmptySample, "diffusion needs a nonempty ensemble");
  const auto& mo = m.moments();
  double s00 = 0.0, s01 = 0.0, s11 = 0.0;
  for (const auto& u : ensemble) {
    const double w0 = v[0] - u[0], w1 = v[1] - u[1];
    const double g = m.kernel().gamma(std::hypot(w0, w1));
    // w w^T and its rotation by pi/2
    s00 += g * (mo.i2 * w0 * w0 + mo.i3 * w1 * w1);
    s01 += g * (mo.i2 - mo.i3) * w0 * w1;
    s11 += g * (mo.i2 * w1 * w1 + mo.i3 * w0 * w0);
  }
  const double k = 0.25 / double(ensemble.size());
  DiffusionDelta d{Mat(2), Mat(2)};
  d.a(0, 0) = k * s00;
  d.a(0, 1) = d.a(1, 0) = k * s01;
  d.a(1, 1) = k * s11;
  d.root = psd_sqrt(d.a);
  return d;
}

// --- particle systems --------------------------------------------------------

double BoltzmannTrajectory::fourth_moment_drift() const {
  double worst = 1.0;
  if (fourth_moment.empty() || !(fourth_moment.front() > 0.0)) return worst;
  for (double m4 : fourth_moment) {
    const double q = m4 / fourth_moment.front();
    worst = std::max({worst, q, 1.0 / q});
  }
  return worst;
}

ParticleEnsemble initial_ensemble(const BoltzmannParams& p, std::size_t n, const RngStream& rng) {
  RngStream s = rng.substream(kInitDomain);
  ParticleEnsemble e(n);
  for (auto& v : e) {
    v[0] = p.initial_std * s.normal();
    v[1] = p.initial_std * s.normal();
  }
  return e;
}

namespace {

double mean_quartic(const ParticleEnsemble& e) {
  double s = 0.0;
  for (const auto& v : e) {
    const double r2 = v[0] * v[0] + v[1] * v[1];
    s += r2 * r2;
  }
  return s / double(e.size());
}

struct Proposal {
  double time = 0.0;
  std::size_t i = 0, j = 0;
  double theta = 0.0, u = 0.0;
};

// Global Nanbu clock over one angular band: total rate n * bound * mass.
class Clock {
 public:
  Clock(const RngStream& base, std::uint64_t domain, std::size_t n, double nu, double lo, double hi, double bound)
      : rng_(base.substream(domain)), n_(n), nu_(nu), lo_(lo), hi_(hi), bound_(bound) {
    const double mass = theta_region_mass(nu, lo, hi);
    rate_ = mass > 0.0 ? double(n) * bound * mass : 0.0;
    advance();
  }
  const Proposal& peek() const { return next_; }
  void advance() {
    if (rate_ == 0.0) {
      next_.time = std::numeric_limits<double>::infinity();
      return;
    }
    next_.time += rng_.exponential(rate_);
    next_.i = rng_.index(n_);
    next_.j = rng_.index(n_ - 1);
    if (next_.j >= next_.i) ++next_.j;
    next_.theta = sample_theta(nu_, lo_, hi_, rng_);
    next_.u = rng_.uniform(0.0, bound_);
  }

 private:
  RngStream rng_;
  std::size_t n_;
  double nu_, lo_, hi_, bound_, rate_ = 0.0;
  Proposal next_;
};

void apply(ParticleEnsemble& e, const Proposal& p, const CollisionKernel& k, BoltzmannTrajectory& tr) {
  auto& v = e[p.i];
  const auto& w = e[p.j];
  ++tr.proposals;
  if (p.u > k.gamma(std::hypot(v[0] - w[0], v[1] - w[1]))) return;
  const Velocity dv = collision_jump(p.theta, v, w);
  v[0] += dv[0];
  v[1] += dv[1];
  ++tr.accepted;
}

void check_inputs(std::size_t n, double horizon) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "particle system needs N >= 2");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
}

class Checkpoints {
 public:
  Checkpoints(double horizon, int k) : horizon_(horizon), k_(k) {}
  void record_until(double t, const ParticleEnsemble& e, BoltzmannTrajectory& tr) {
    while (next_ <= k_ && time(next_) <= t * (1.0 + 1e-12)) {
      tr.times.push_back(time(next_));
      tr.fourth_moment.push_back(mean_quartic(e));
      ++next_;
    }
  }

 private:
  double time(int i) const { return i == k_ ? horizon_ : horizon_ * double(i) / double(k_); }
  double horizon_;
  int k_, next_ = 0;
};

// One synchronous Euler step of the small-angle replacement.
void hybrid_step(ParticleEnsemble& e, const BoltzmannModel& m, int order, double dt, RngStream& noise,
                 std::vector<Velocity>& inc) {
  const std::size_t n = e.size();
  const auto& mo = m.moments();
  const auto& ker = m.kernel();
  inc.assign(n, Velocity{0.0, 0.0});
  if (ker.constant()) {
    // gamma is constant: partner averages reduce to ensemble sums.
    const double g = ker.gamma(0.0);
    double s0 = 0.0, s1 = 0.0, q00 = 0.0, q01 = 0.0, q11 = 0.0;
    for (const auto& v : e) {
      s0 += v[0];
      s1 += v[1];
      q00 += v[0] * v[0];
      q01 += v[0] * v[1];
      q11 += v[1] * v[1];
    }
    const double inv = 1.0 / double(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = e[i];
      const double m0 = (s0 - v[0]) * inv, m1 = (s1 - v[1]) * inv;
      inc[i][0] = 0.5 * mo.i1 * g * (v[0] - m0) * dt;
      inc[i][1] = 0.5 * mo.i1 * g * (v[1] - m1) * dt;
      if (order == 2) {
        // average of w w^T over the other particles
        const double c00 = v[0] * v[0] - 2.0 * v[0] * m0 + (q00 - v[0] * v[0]) * inv;
        const double c01 = v[0] * v[1] - v[0] * m1 - m0 * v[1] + (q01 - v[0] * v[1]) * inv;
        const double c11 = v[1] * v[1] - 2.0 * v[1] * m1 + (q11 - v[1] * v[1]) * inv;
        Mat a(2);
        a(0, 0) = 0.25 * g * (mo.i2 * c00 + mo.i3 * c11);
        a(0, 1) = a(1, 0) = 0.25 * g * (mo.i2 - mo.i3) * c01;
        a(1, 1) = 0.25 * g * (mo.i2 * c11 + mo.i3 * c00);
        const Mat r = psd_sqrt(a);
        const double sq = std::sqrt(dt), x0 = noise.normal(), x1 = noise.normal();
        inc[i][0] += sq * (r(0, 0) * x0 + r(0, 1) * x1);
        inc[i][1] += sq * (r(1, 0) * x0 + r(1, 1) * x1);
      }
    }
  } else {
    // One random partner per particle and step: unbiased for the partner average.
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = noise.index(n - 1);
      if (j >= i) ++j;
      const double w0 = e[i][0] - e[j][0], w1 = e[i][1] - e[j][1];
      const double g = ker.gamma(std::hypot(w0, w1));
      inc[i][0] = 0.5 * mo.i1 * g * w0 * dt;
      inc[i][1] = 0.5 * mo.i1 * g * w1 * dt;
      if (order == 2) {
        // root of (g/4)(I2 w w^T + I3 w' w'^T) with w' = w rotated by pi/2
        const double k = 0.5 * std::sqrt(g * dt), x0 = std::sqrt(mo.i2) * noise.normal(),
                     x1 = std::sqrt(mo.i3) * noise.normal();
        inc[i][0] += k * (x0 * w0 - x1 * w1);
        inc[i][1] += k * (x0 * w1 + x1 * w0);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    e[i][0] += inc[i][0];
    e[i][1] += inc[i][1];
    if (!std::isfinite(e[i][0]) || !std::isfinite(e[i][1]))
      throw Error(ErrorCode::NonFiniteCoefficient, "particle velocity became non-finite");
  }
}

BoltzmannTrajectory run_hybrid(const BoltzmannModel& m, std::size_t n, double horizon, const RngStream& rng,
                               int order) {
  check_inputs(n, horizon);
  const auto& p = m.params();
  BoltzmannTrajectory tr;
  ParticleEnsemble e = initial_ensemble(p, n, rng);
  tr.initial = e;
  Clock large(rng, kLargeDomain, n, p.nu, std::min(p.delta, kHalfPi), kHalfPi, m.kernel().bound());
  RngStream noise = rng.substream(kNoiseDomain);
  Checkpoints cp(horizon, p.checkpoints);
  cp.record_until(0.0, e, tr);
  std::vector<Velocity> inc;
  double t = 0.0;
  while (t < horizon) {
    const double dt = std::min(p.step, horizon - t);
    const double t1 = (horizon - t - dt <= 1e-12 * horizon) ? horizon : t + dt;
    while (large.peek().time <= t1) {
      apply(e, large.peek(), m.kernel(), tr);
      large.advance();
    }
    hybrid_step(e, m, order, t1 - t, noise, inc);
    t = t1;
    cp.record_until(t, e, tr);
  }
  tr.final = std::move(e);
  return tr;
}

}  // namespace

BoltzmannTrajectory simulate_cutoff(const BoltzmannModel& m, std::size_t n, double horizon, const RngStream& rng) {
  check_inputs(n, horizon);
  const auto& p = m.params();
  BoltzmannTrajectory tr;
  ParticleEnsemble e = initial_ensemble(p, n, rng);
  tr.initial = e;
  const double split = std::min(p.delta, kHalfPi);
  Clock large(rng, kLargeDomain, n, p.nu, split, kHalfPi, m.kernel().bound());
  Clock small(rng, kSmallDomain, n, p.nu, p.theta_floor, split, m.kernel().bound());
  Checkpoints cp(horizon, p.checkpoints);
  while (true) {
    Clock& c = large.peek().time <= small.peek().time ? large : small;
    const double t = c.peek().time;
    if (t > horizon) break;
    cp.record_until(t, e, tr);
    apply(e, c.peek(), m.kernel(), tr);
    c.advance();
  }
  cp.record_until(horizon, e, tr);
  tr.final = std::move(e);
  return tr;
}

BoltzmannTrajectory simulate_hybrid_order1(const BoltzmannModel& m, std::size_t n, double horizon,
                                           const RngStream& rng) {
  return run_hybrid(m, n, horizon, rng, 1);
}

BoltzmannTrajectory simulate_hybrid_order2(const BoltzmannModel& m, std::size_t n, double horizon,
                                           const RngStream& rng) {
  return run_hybrid(m, n, horizon, rng, 2);
}

BoltzmannTrajectory simulate_cutoff(const BoltzmannParams& p, std::size_t n, double horizon, const RngStream& rng) {
  return simulate_cutoff(BoltzmannModel(p), n, horizon, rng);
}
BoltzmannTrajectory simulate_hybrid_order1(const BoltzmannParams& p, std::size_t n, double horizon,
                                           const RngStream& rng) {
  return run_hybrid(BoltzmannModel(p), n, horizon, rng, 1);
}
BoltzmannTrajectory simulate_hybrid_order2(const BoltzmannParams& p, std::size_t n, double horizon,
                                           const RngStream& rng) {
  return run_hybrid(BoltzmannModel(p), n, horizon, rng, 2);
}

double ensemble_mean(const ParticleEnsemble& e, const TestFunction& f) {
  if (e.empty()) throw Error(ErrorCode::EmptySample, "empty ensemble");
  double s = 0.0;
  for (const auto& v : e) s += f(Vec{v[0], v[1]});
  return s / double(e.size());
}

// --- experiment -------------------------------------------------------------

namespace {

struct ReplicaResult {
  double cutoff = 0.0, hybrid = 0.0, drift = 1.0;
  std::size_t proposals = 0, accepted = 0;
};

ReplicaResult one_replica(const BoltzmannModel& m, const TestFunction& f, const BoltzmannExperimentConfig& cfg,
                          std::size_t r) {
  const RngStream base(cfg.seed, r);
  const auto c = simulate_cutoff(m, cfg.particles, cfg.horizon, base);
  const auto h = run_hybrid(m, cfg.particles, cfg.horizon, base, m.params().order);
  return {ensemble_mean(c.final, f), ensemble_mean(h.final, f),
          std::max(c.fourth_moment_drift(), h.fourth_moment_drift()), c.proposals, c.accepted};
}

ReplicaPair collect(const std::vector<ReplicaResult>& rs) {
  ReplicaPair out;
  std::size_t prop = 0, acc = 0;
  for (const auto& r : rs) {
    out.cutoff.push_back(r.cutoff);
    out.hybrid.push_back(r.hybrid);
    out.fourth_moment_drift = std::max(out.fourth_moment_drift, r.drift);
    prop += r.proposals;
    acc += r.accepted;
  }
  out.acceptance = prop ? double(acc) / double(prop) : 0.0;
  return out;
}

void check_config(const BoltzmannExperimentConfig& cfg) {
  if (cfg.replicas < 2) throw Error(ErrorCode::InvalidArgument, "need at least two replicas");
  if (cfg.particles < 2) throw Error(ErrorCode::InvalidArgument, "need at least two particles");
}

}  // namespace

ReplicaPair replica_means(const BoltzmannModel& m, const TestFunction& f, const BoltzmannExperimentConfig& cfg) {
  check_config(cfg);
  std::vector<ReplicaResult> rs(cfg.replicas);
  std::vector<std::exception_ptr> errors(cfg.replicas);
  const long nr = static_cast<long>(cfg.replicas);
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.workers > 0 ? cfg.workers : default_workers())
  for (long i = 0; i < nr; ++i) {
    try {
      rs[i] = one_replica(m, f, cfg, static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return collect(rs);
}

ReplicaPair replica_means_serial(const BoltzmannModel& m, const TestFunction& f,
                                 const BoltzmannExperimentConfig& cfg) {
  check_config(cfg);
  std::vector<ReplicaResult> rs;
  for (std::size_t i = 0; i < cfg.replicas; ++i) rs.push_back(one_replica(m, f, cfg, i));
  return collect(rs);
}

BoltzmannReport boltzmann_experiment(const std::vector<BoltzmannParams>& grid, const TestFunction& f,
                                     const BoltzmannExperimentConfig& cfg) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty delta grid");
  BoltzmannReport rep;
  rep.level = cfg.level;
  for (const auto& p : grid) {
    const BoltzmannModel m(p);
    const auto pair = replica_means(m, f, cfg);
    BoltzmannRow row;
    row.delta = p.delta;
    row.order = p.order;
    row.error = paired_weak_error(pair.cutoff, pair.hybrid, cfg.level);
    row.theoretical_exponent = p.theoretical_exponent();
    row.n_particles = cfg.particles;
    row.n_replicas = cfg.replicas;
    row.fourth_moment_drift = pair.fourth_moment_drift;
    row.acceptance = pair.acceptance;
    rep.rows.push_back(row);
  }
  return rep;
}

WeakErrorReport BoltzmannReport::weak_error_report() const {
  WeakErrorReport w;
  w.parameter_name = "delta";
  w.level = level;
  for (const auto& r : rows) w.rows.push_back({r.delta, r.error, r.n_replicas});
  if (w.rows.size() >= 2) {
    try {
      w.fit_rows();
    } catch (const Error&) {
      w.fitted = false;
    }
  }
  return w;
}

// --- generators --------------------------------------------------------------

namespace {

Velocity as_velocity(const Vec& x) {
  if (x.size() != 2) throw Error(ErrorCode::InvalidArgument, "Boltzmann generators act on R^2");
  return {x[0], x[1]};
}

// int_{lo < |theta| <= hi} (f(v + A(theta) w) - f(v)) |theta|^{-1-nu}
// On (0, kTaylor] the symmetric difference is lost to cancellation, so it is
// replaced by its second-order expansion, integrated in closed form through
// the angular moments `near` of (0, kTaylor].
constexpr double kTaylor = 1e-3;

double angular_part(const TestFunction& f, const Velocity& v, double fv, double wx, double wy, double nu, double lo,
                    double hi, const ThetaMoments& near, const QuadratureOptions& quad) {
  if (hi <= lo) return 0.0;
  double total = 0.0;
  if (lo == 0.0) {
    if (!f.gradient || !f.hessian)
      throw Error(ErrorCode::MissingDerivative, "small-angle generator needs gradient and hessian");
    const Vec x{v[0], v[1]};
    const Vec g = f.gradient(x);
    const Mat h = f.hessian(x);
    // w' = w rotated by pi/2; moments count both signs, the sum over +-theta is folded in
    const double px = -wy, py = wx;
    total += 0.5 * near.i1 * (g[0] * wx + g[1] * wy) +
             0.125 * near.i3 * (h(0, 0) * px * px + 2.0 * h(0, 1) * px * py + h(1, 1) * py * py);
    lo = kTaylor;
    if (hi <= lo) throw Error(ErrorCode::InvalidArgument, "angular split below the expansion threshold");
  }
  total += integrate(
      [&](double t) {
        const double cm = cos_minus_one(t), s = std::sin(t);
        const double ax = 0.5 * (cm * wx), ay = 0.5 * (cm * wy);
        const double rx = 0.5 * (-s * wy), ry = 0.5 * (s * wx);
        const double fp = f(Vec{v[0] + ax + rx, v[1] + ay + ry});
        const double fm = f(Vec{v[0] + ax - rx, v[1] + ay - ry});
        return (fp + fm - 2.0 * fv) * std::pow(t, -1.0 - nu);
      },
      lo, hi, quad);
  return total;
}

}  // namespace

Operator cutoff_generator(const BoltzmannModel& m, ParticleEnsemble ensemble, const QuadratureOptions& quad) {
  if (ensemble.empty()) throw Error(ErrorCode::EmptySample, "empty ensemble");
  const ThetaMoments near = theta_moments(m.params().nu, kTaylor);
  return [m, ens = std::move(ensemble), quad, near](const TestFunction& f, double, const Vec& x) {
    const Velocity v = as_velocity(x);
    const double fv = f(x), nu = m.params().nu, split = std::min(m.params().delta, kHalfPi);
    double s = 0.0;
    for (const auto& u : ens) {
      const double wx = v[0] - u[0], wy = v[1] - u[1];
      if (wx == 0.0 && wy == 0.0) continue;
      const double g = m.kernel().gamma(std::hypot(wx, wy));
      s += g * (angular_part(f, v, fv, wx, wy, nu, 0.0, split, near, quad) +
                angular_part(f, v, fv, wx, wy, nu, split, kHalfPi, near, quad));
    }
    return s / double(ens.size());
  };
}

Operator hybrid_generator(const BoltzmannModel& m, ParticleEnsemble ensemble, int order,
                          const QuadratureOptions& quad) {
  if (ensemble.empty()) throw Error(ErrorCode::EmptySample, "empty ensemble");
  if (order != 1 && order != 2) throw Error(ErrorCode::InvalidArgument, "order must be 1 or 2");
  const ThetaMoments near = theta_moments(m.params().nu, kTaylor);
  return [m, ens = std::move(ensemble), order, quad, near](const TestFunction& f, double, const Vec& x) {
    const Velocity v = as_velocity(x);
    const double fv = f(x), nu = m.params().nu, split = std::min(m.params().delta, kHalfPi);
    double s = 0.0;
    for (const auto& u : ens) {
      const double wx = v[0] - u[0], wy = v[1] - u[1];
      if (wx == 0.0 && wy == 0.0) continue;
      s += m.kernel().gamma(std::hypot(wx, wy)) * angular_part(f, v, fv, wx, wy, nu, split, kHalfPi, near, quad);
    }
    s /= double(ens.size());
    const Velocity b = drift_delta(m, v, ens);
    const Vec g = f.gradient(x);
    s += b[0] * g[0] + b[1] * g[1];
    if (order == 2) {
      const auto d = diffusion_delta(m, v, ens);
      const Mat h = f.hessian(x);
      double tr = 0.0;
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) tr += d.a(i, j) * h(j, i);
      s += 0.5 * tr;
    }
    return s;
  };
}

std::vector<double> holder_ratios(const BoltzmannParams& p, double beta, std::span<const double> xs,
                                  std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "xs and ys differ in length");
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "beta must lie in (0,1]");
  const CollisionKernel k(p);
  const double scale = std::pow(p.gamma_eps(), p.kappa);
  std::vector<double> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = std::abs(xs[i] - ys[i]);
    if (d == 0.0) continue;
    out.push_back(std::pow(xs[i], beta) * std::abs(k.gamma(xs[i]) - k.gamma(ys[i])) / (scale * std::pow(d, beta)));
  }
  return out;
}

}  // namespace hybridjump
