#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hybridjump/linalg.hpp"
#include "hybridjump/quadrature.hpp"
#include "hybridjump/rng.hpp"

namespace hybridjump {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Half-open interval (lo, hi].
struct Interval {
  double lo;
  double hi;
  friend bool operator==(const Interval&, const Interval&) = default;
};

// A measurable set of marks: a finite union of intervals (density measures),
// a set of atom indices (discrete measures), or everything.
class Region {
 public:
  enum class Kind { All, Intervals, Indices };

  static Region all() { return Region(Kind::All); }
  static Region empty() { return intervals({}); }
  static Region interval(double lo, double hi) { return intervals({{lo, hi}}); }
  static Region intervals(std::vector<Interval> parts);
  static Region indices(std::vector<std::size_t> idx);

  Kind kind() const { return kind_; }
  const std::vector<Interval>& parts() const { return parts_; }
  const std::vector<std::size_t>& index_set() const { return idx_; }

  bool is_all() const { return kind_ == Kind::All; }
  bool is_empty() const;
  bool contains(double z) const;            // interval/all regions
  bool contains_index(std::size_t i) const;  // index/all regions

  Region unite(const Region& o) const;
  Region intersect(const Region& o) const;
  // All minus an index set is not representable without the universe;
  // use MarkMeasure::complement for that.
  Region difference(const Region& o) const;

  std::string describe() const;
  friend bool operator==(const Region&, const Region&) = default;

 private:
  explicit Region(Kind k) : kind_(k) {}
  Kind kind_;
  std::vector<Interval> parts_;
  std::vector<std::size_t> idx_;
};

struct Atom {
  double value;
  double weight;
};

// Density weight * |z|^exponent on (lo, hi]; the piece must not straddle 0.
struct PowerLawPiece {
  double lo;
  double hi;
  double weight;
  double exponent;
};

class MarkMeasure {
 public:
  enum class Kind { Discrete, Density };

  static MarkMeasure discrete(std::vector<Atom> atoms);
  static MarkMeasure density(std::vector<PowerLawPiece> pieces);

  Kind kind() const { return kind_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<PowerLawPiece>& pieces() const { return pieces_; }

  Region support() const;
  Region complement(const Region& g) const { return support().difference(resolve(g)); }
  Region resolve(const Region& g) const { return g.is_all() ? support() : g; }

  double mass(const Region& g) const;  // +inf allowed
  double total_mass() const { return total_mass_; }
  MarkMeasure restricted(const Region& g) const;

  // Normalized law of the restriction, for hot loops.
  class Sampler {
   public:
    double mass() const { return mass_; }
    double draw(RngStream& rng) const;

   private:
    friend class MarkMeasure;
    std::vector<double> cum_;  // cumulative masses
    std::vector<PowerLawPiece> pieces_;
    std::vector<Atom> atoms_;
    double mass_ = 0.0;
  };
  Sampler sampler(const Region& g) const;  // InfiniteMass if mu(g) = inf
  double sample(const Region& g, RngStream& rng) const { return sampler(g).draw(rng); }

  // CDF of mu restricted to g and normalized, at z.
  double normalized_cdf(const Region& g, double z) const;

  // Integral of m-vector integrand against 1_g mu.
  std::vector<double> integrate_many(const MultiIntegrand& f, std::size_t m, const Region& g,
                                     const QuadratureOptions& opt = {}) const;
  double integrate(const std::function<double(double)>& f, const Region& g,
                   const QuadratureOptions& opt = {}) const;

  // Points of the support intersected with g: atoms, or for densities a
  // geometric/linear lattice of n points per piece.
  std::vector<double> mark_grid(const Region& g, int n_per_piece = 17) const;

 private:
  // pieces clipped to g; empty pieces dropped
  std::vector<PowerLawPiece> clip(const Region& g) const;
  std::vector<std::size_t> atom_indices(const Region& g) const;

  Kind kind_ = Kind::Density;
  std::vector<Atom> atoms_;
  std::vector<PowerLawPiece> pieces_;
  double total_mass_ = 0.0;
};

double piece_mass(const PowerLawPiece& p);

using StateFn = std::function<Vec(double t, const Vec& x)>;
using MarkFn = std::function<Vec(double t, double z, const Vec& x)>;
using RateFn = std::function<double(double t, double z, const Vec& x)>;
using CovarianceFn = std::function<Mat(double t, const Vec& x)>;

// Multi-index as an ordered tuple of coordinate indices in [0, d).
using MultiIndex = std::vector<int>;

struct DerivativeOracles {
  int max_order = 0;
  std::function<Vec(const MultiIndex&, double t, const Vec& x)> drift;
  std::function<Vec(const MultiIndex&, std::size_t l, double t, const Vec& x)> diffusion;
  std::function<Vec(const MultiIndex&, double t, double z, const Vec& x)> jump_amplitude;
  std::function<double(const MultiIndex&, double t, double z, const Vec& x)> log_rate;
};

struct CoefficientSet {
  std::size_t dim = 1;
  StateFn drift;                        // empty means b = 0
  std::vector<StateFn> diffusion;       // sigma_l columns
  CovarianceFn covariance;              // alternative: a(t, x)
  MarkFn jump_amplitude;                // c; empty means c = 0
  RateFn jump_rate;                     // gamma; empty means gamma = rate_bound
  double rate_bound = 1.0;              // Gamma
  std::function<double(double)> lipschitz_c;
  std::function<double(double)> lipschitz_gamma;
  std::optional<DerivativeOracles> derivatives;
  bool finite_difference_fallback = true;
  double fd_step = 1e-4;

  bool has_diffusion() const { return !diffusion.empty() || static_cast<bool>(covariance); }
  bool has_flow() const { return static_cast<bool>(drift) || has_diffusion(); }

  Vec b(double t, const Vec& x) const { return drift ? drift(t, x) : Vec(dim); }
  Vec c(double t, double z, const Vec& x) const {
    return jump_amplitude ? jump_amplitude(t, z, x) : Vec(dim);
  }
  double gamma(double t, double z, const Vec& x) const {
    return jump_rate ? jump_rate(t, z, x) : rate_bound;
  }
  // a = sum_l sigma_l sigma_l^T, or the covariance field.
  Mat a(double t, const Vec& x) const;
};

class JumpModel {
 public:
  JumpModel(CoefficientSet coefficients, MarkMeasure measure, double horizon);

  const CoefficientSet& coefficients() const { return coef_; }
  const MarkMeasure& measure() const { return measure_; }
  double horizon() const { return horizon_; }
  std::size_t dim() const { return coef_.dim; }

  JumpModel restrict(const Region& g) const;
  JumpModel with_coefficients(CoefficientSet c) const { return JumpModel(std::move(c), measure_, horizon_); }

 private:
  CoefficientSet coef_;
  MarkMeasure measure_;
  double horizon_;
};

// Finite evaluation set for suprema over (t, x): the product times x states.
struct Grid {
  std::vector<double> times{0.0};
  std::vector<Vec> states;

  std::size_t size() const { return times.size() * states.size(); }
  // Tensor lattice with n points per axis on [lo, hi]^d.
  static Grid lattice(std::size_t d, double lo, double hi, int n, std::vector<double> times = {0.0});
};

struct ValidationReport {
  double rate_margin = 0.0;   // Gamma - sup gamma over grid and mark lattice, >= 0
  double c_mu = 0.0;          // C_mu(gamma, c) over E
  bool c_mu_estimated = false;  // Lipschitz moduli estimated by difference quotients
  double alpha = 0.0;         // alpha(G)
  bool c_mu_finite = true;
  bool alpha_finite = true;
  std::size_t grid_points = 0;
};

ValidationReport validate_model(const JumpModel& m, const Grid& grid, const Region& g,
                                const QuadratureOptions& opt = {});

JumpModel restrict(const JumpModel& m, const Region& g);

// sup over the grid of int_G |c| gamma dmu
double alpha_of(const JumpModel& m, const Region& g, const Grid& grid,
                const QuadratureOptions& opt = {});

// C_mu(gamma, c) = int_E (l_gamma |c| + l_c gamma) dmu, sup over the grid.
// Missing moduli are replaced by difference-quotient estimates over the grid.
struct CMuResult {
  double value;
  bool estimated;
};
CMuResult c_mu(const JumpModel& m, const Grid& grid, const QuadratureOptions& opt = {});

}  // namespace hybridjump
