#pragma once

// Two-dimensional Boltzmann collision dynamics with a cutoff on the relative
// speed, realized as a Nanbu particle system, and its small-angle hybrid
// replacements (drift only, or drift plus Gaussian diffusion).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hybridjump/generator.hpp"
#include "hybridjump/linalg.hpp"
#include "hybridjump/quadrature.hpp"
#include "hybridjump/rng.hpp"
#include "hybridjump/weakerr.hpp"

namespace hybridjump {

using Velocity = std::array<double, 2>;
using ParticleEnsemble = std::vector<Velocity>;

struct BoltzmannParams {
  double nu = 0.3;
  double kappa = 0.1;
  double eta0 = 1.0;
  double delta = 0.1;
  double r = 0.0;             // epsilon = delta^r
  double tail_exponent = 2.0; // s in the exponential moment of f0; Gaussian gives 2
  double theta_floor = 1e-3;  // smallest |theta| the cutoff simulator resolves
  double step = 0.01;         // Euler step of the hybrid drift/diffusion
  double initial_std = 1.0;   // f0 = N(0, initial_std^2 I)
  int order = 1;
  int checkpoints = 10;

  static double first_order_r(double nu, double kappa) { return (2.0 - 3.0 * nu) / (3.0 + kappa); }
  // Supremum of admissible r for the second-order scheme; r must stay below it.
  static double second_order_r_max(double nu, double kappa);
  static BoltzmannParams first_order(double nu, double kappa, double delta, double eta0 = 1.0);
  static BoltzmannParams second_order(double nu, double kappa, double delta, double eta0 = 1.0);

  double epsilon() const;
  double gamma_eps() const;  // (ln 1/eps)^eta0
  // Order 1: bound on the rate exponent; order 2: r(1 + kappa).
  double theoretical_exponent() const;
  // Throws ParameterConstraintViolated.
  void validate() const;
};

// Normalized bump exp(-1/(1-s^2)) on (-1, 1).
double bump(double s);
double bump_normalizer();

// Mollified clamp x -> ((x v 2eps) ^ Gamma) * chi_eps. Outside the two
// transition windows the value is exact; inside, a cubic Hermite table built
// from the quadrature values and derivatives is used (error < 1e-8).
class CutoffFunction {
 public:
  CutoffFunction(double eps, double gamma_eps, std::size_t table_nodes = 1024);

  double operator()(double x) const;
  double exact(double x) const;             // 64-point Gauss-Legendre per clamp piece
  double exact_derivative(double x) const;
  bool constant() const { return upper_ <= lower_; }
  double eps() const { return eps_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  struct Table {
    double lo = 0.0, h = 0.0;
    std::vector<double> value, slope;
    bool covers(double x) const { return h > 0.0 && x >= lo && x <= lo + h * double(value.size() - 1); }
    double eval(double x) const;
  };
  void build(Table& t, double a, double b, std::size_t n) const;

  double eps_, lower_, upper_;
  std::vector<Table> tables_;
};

double cutoff_phi(const BoltzmannParams& p, double x);

// gamma(x) = phi(x)^kappa with its dominating bound 2 Gamma^kappa.
class CollisionKernel {
 public:
  explicit CollisionKernel(const BoltzmannParams& p);
  double gamma(double speed) const;
  double bound() const { return bound_; }
  bool constant() const { return phi_.constant(); }
  const CutoffFunction& phi() const { return phi_; }

 private:
  CutoffFunction phi_;
  double kappa_, bound_;
};

// Mass of |theta|^{-1-nu} dtheta over lo <= |theta| <= hi (both signs).
double theta_region_mass(double nu, double lo, double hi);
double sample_theta(double nu, double lo, double hi, RngStream& rng);
Velocity collision_jump(double theta, const Velocity& v, const Velocity& v_star);

struct ThetaMoments {
  double i1 = 0.0;  // int (cos - 1)
  double i2 = 0.0;  // int (cos - 1)^2
  double i3 = 0.0;  // int sin^2
};
ThetaMoments theta_moments(double nu, double delta, const QuadratureOptions& quad = {});

// Everything a simulation needs, computed once per parameter set.
class BoltzmannModel {
 public:
  explicit BoltzmannModel(const BoltzmannParams& p);
  const BoltzmannParams& params() const { return p_; }
  const CollisionKernel& kernel() const { return kernel_; }
  const ThetaMoments& moments() const { return moments_; }

 private:
  BoltzmannParams p_;
  CollisionKernel kernel_;
  ThetaMoments moments_;
};

Velocity drift_delta(const BoltzmannModel& m, const Velocity& v, std::span<const Velocity> ensemble);
struct DiffusionDelta {
  Mat a;
  Mat root;
};
DiffusionDelta diffusion_delta(const BoltzmannModel& m, const Velocity& v, std::span<const Velocity> ensemble);

struct BoltzmannTrajectory {
  ParticleEnsemble initial;
  ParticleEnsemble final;
  std::vector<double> times;          // checkpoints, including 0 and T
  std::vector<double> fourth_moment;  // ensemble mean |V|^4 at the checkpoints
  std::size_t proposals = 0;
  std::size_t accepted = 0;

  // max over checkpoints of max(m4/m4(0), m4(0)/m4)
  double fourth_moment_drift() const;
};

ParticleEnsemble initial_ensemble(const BoltzmannParams& p, std::size_t n, const RngStream& rng);

// The rng identifies a replica; substreams separate the initial ensemble,
// the large-angle clock (shared by all three simulators, so runs on the same
// replica are coupled), the small-angle clock and the hybrid noise.
BoltzmannTrajectory simulate_cutoff(const BoltzmannModel& m, std::size_t n, double horizon, const RngStream& rng);
BoltzmannTrajectory simulate_hybrid_order1(const BoltzmannModel& m, std::size_t n, double horizon,
                                           const RngStream& rng);
BoltzmannTrajectory simulate_hybrid_order2(const BoltzmannModel& m, std::size_t n, double horizon,
                                           const RngStream& rng);
BoltzmannTrajectory simulate_cutoff(const BoltzmannParams& p, std::size_t n, double horizon, const RngStream& rng);
BoltzmannTrajectory simulate_hybrid_order1(const BoltzmannParams& p, std::size_t n, double horizon,
                                           const RngStream& rng);
BoltzmannTrajectory simulate_hybrid_order2(const BoltzmannParams& p, std::size_t n, double horizon,
                                           const RngStream& rng);

double ensemble_mean(const ParticleEnsemble& e, const TestFunction& f);

struct BoltzmannExperimentConfig {
  double horizon = 0.5;
  std::size_t particles = 2000;
  std::size_t replicas = 200;
  std::uint64_t seed = 1;
  double level = 0.99;
  int workers = 0;
};

struct BoltzmannRow {
  double delta = 0.0;
  int order = 1;
  WeakErrorEstimate error;
  double theoretical_exponent = 0.0;
  std::size_t n_particles = 0;
  std::size_t n_replicas = 0;
  double fourth_moment_drift = 1.0;  // worst over replicas and both simulators
  double acceptance = 0.0;           // cutoff simulator, pooled
};

struct BoltzmannReport {
  std::vector<BoltzmannRow> rows;
  double level = 0.99;
  WeakErrorReport weak_error_report() const;
};

// Per replica: ensemble means of f for the cutoff and the hybrid run.
struct ReplicaPair {
  std::vector<double> cutoff, hybrid;
  double fourth_moment_drift = 1.0;
  double acceptance = 0.0;
};
ReplicaPair replica_means(const BoltzmannModel& m, const TestFunction& f, const BoltzmannExperimentConfig& cfg);
ReplicaPair replica_means_serial(const BoltzmannModel& m, const TestFunction& f,
                                 const BoltzmannExperimentConfig& cfg);

BoltzmannReport boltzmann_experiment(const std::vector<BoltzmannParams>& grid, const TestFunction& f,
                                     const BoltzmannExperimentConfig& cfg);

// Generators acting on test functions of v in R^2 for a frozen ensemble.
// The cutoff generator integrates every angle; the hybrids replace
// |theta| <= delta by the drift (and diffusion for order 2).
Operator cutoff_generator(const BoltzmannModel& m, ParticleEnsemble ensemble, const QuadratureOptions& quad = {});
Operator hybrid_generator(const BoltzmannModel& m, ParticleEnsemble ensemble, int order,
                          const QuadratureOptions& quad = {});

// x^beta |g(x) - g(y)| / (Gamma^kappa |x - y|^beta) for g = phi^kappa.
std::vector<double> holder_ratios(const BoltzmannParams& p, double beta, std::span<const double> xs,
                                  std::span<const double> ys);

}  // namespace hybridjump
