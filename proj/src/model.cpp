#include "hybridjump/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybridjump/error.hpp"

namespace hybridjump {

// ---- Region ---------------------------------------------------------------

Region Region::intervals(std::vector<Interval> parts) {
  std::erase_if(parts, [](const Interval& i) { return !(i.hi > i.lo); });
  std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  Region r(Kind::Intervals);
  for (const auto& p : parts) {
    if (!r.parts_.empty() && p.lo <= r.parts_.back().hi)
      r.parts_.back().hi = std::max(r.parts_.back().hi, p.hi);
    else
      r.parts_.push_back(p);
  }
  return r;
}

Region Region::indices(std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  Region r(Kind::Indices);
  r.idx_ = std::move(idx);
  return r;
}

bool Region::is_empty() const {
  switch (kind_) {
    case Kind::All: return false;
    case Kind::Intervals: return parts_.empty();
    case Kind::Indices: return idx_.empty();
  }
  return true;
}

bool Region::contains(double z) const {
  if (kind_ == Kind::All) return true;
  if (kind_ != Kind::Intervals) throw Error(ErrorCode::InvalidArgument, "index region queried by mark value");
  return std::any_of(parts_.begin(), parts_.end(), [z](const Interval& i) { return z > i.lo && z <= i.hi; });
}

bool Region::contains_index(std::size_t i) const {
  if (kind_ == Kind::All) return true;
  if (kind_ != Kind::Indices) throw Error(ErrorCode::InvalidArgument, "interval region queried by index");
  return std::binary_search(idx_.begin(), idx_.end(), i);
}

namespace {
void check_same_kind(const Region& a, const Region& b) {
  if (a.kind() != b.kind())
    throw Error(ErrorCode::InvalidArgument, "mixing interval and index regions");
}
}  // namespace

Region Region::unite(const Region& o) const {
  if (is_all() || o.is_all()) return all();
  if (is_empty()) return o;
  if (o.is_empty()) return *this;
  check_same_kind(*this, o);
  if (kind_ == Kind::Intervals) {
    auto p = parts_;
    p.insert(p.end(), o.parts_.begin(), o.parts_.end());
    return intervals(std::move(p));
  }
  auto i = idx_;
  i.insert(i.end(), o.idx_.begin(), o.idx_.end());
  return indices(std::move(i));
}

Region Region::intersect(const Region& o) const {
  if (is_all()) return o;
  if (o.is_all()) return *this;
  if (is_empty()) return *this;
  if (o.is_empty()) return o;
  check_same_kind(*this, o);
  if (kind_ == Kind::Intervals) {
    std::vector<Interval> out;
    for (const auto& a : parts_)
      for (const auto& b : o.parts_) out.push_back({std::max(a.lo, b.lo), std::min(a.hi, b.hi)});
    return intervals(std::move(out));
  }
  std::vector<std::size_t> out;
  std::set_intersection(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(out));
  return indices(std::move(out));
}

Region Region::difference(const Region& o) const {
  if (o.is_all()) return empty();
  if (o.is_empty()) return *this;
  if (is_all()) {
    if (o.kind_ == Kind::Indices)
      throw Error(ErrorCode::InvalidArgument, "complement of an index set needs the measure");
    return interval(-kInf, kInf).difference(o);
  }
  if (is_empty()) return *this;
  check_same_kind(*this, o);
  if (kind_ == Kind::Intervals) {
    std::vector<Interval> out;
    for (const auto& a : parts_) {
      double lo = a.lo;
      for (const auto& b : o.parts_) {
        if (b.hi <= lo || b.lo >= a.hi) continue;
        if (b.lo > lo) out.push_back({lo, b.lo});
        lo = std::max(lo, b.hi);
      }
      if (lo < a.hi) out.push_back({lo, a.hi});
    }
    return intervals(std::move(out));
  }
  std::vector<std::size_t> out;
  std::set_difference(idx_.begin(), idx_.end(), o.idx_.begin(), o.idx_.end(), std::back_inserter(out));
  return indices(std::move(out));
}

std::string Region::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == Kind::All) return "E";
  if (is_empty()) return "{}";
  if (kind_ == Kind::Intervals) {
    for (std::size_t i = 0; i < parts_.size(); ++i)
      os << (i ? " u " : "") << "(" << parts_[i].lo << ", " << parts_[i].hi << "]";
  } else {
    os << "{";
    for (std::size_t i = 0; i < idx_.size(); ++i) os << (i ? "," : "") << idx_[i];
    os << "}";
  }
  return os.str();
}

// ---- MarkMeasure ----------------------------------------------------------

namespace {

// Mass of w z^p on (lo, hi] with 0 <= lo < hi.
double positive_piece_mass(double lo, double hi, double w, double p) {
  if (w == 0.0) return 0.0;
  const double q = p + 1.0;
  if (lo == 0.0) return q > 0.0 ? w * std::pow(hi, q) / q : kInf;
  const double l = std::log(hi / lo);
  if (q == 0.0) return w * l;
  return w * std::pow(lo, q) * std::expm1(q * l) / q;
}

// Mass of w z^p on (lo, z] for lo <= z, same conventions.
double positive_piece_partial(double lo, double hi, double w, double p, double z) {
  return positive_piece_mass(lo, std::clamp(z, lo, hi), w, p);
}

double positive_piece_draw(double lo, double hi, double p, double u) {
  const double q = p + 1.0;
  if (lo == 0.0) return hi * std::pow(u, 1.0 / q);
  const double l = std::log(hi / lo);
  if (q == 0.0) return lo * std::exp(u * l);
  return lo * std::exp(std::log1p(u * std::expm1(q * l)) / q);
}

}  // namespace

double piece_mass(const PowerLawPiece& p) {
  if (p.lo >= 0.0) return positive_piece_mass(p.lo, p.hi, p.weight, p.exponent);
  return positive_piece_mass(-p.hi, -p.lo, p.weight, p.exponent);
}

MarkMeasure MarkMeasure::discrete(std::vector<Atom> atoms) {
  MarkMeasure m;
  m.kind_ = Kind::Discrete;
  for (const auto& a : atoms)
    if (!(a.weight > 0.0) || !std::isfinite(a.weight) || !std::isfinite(a.value))
      throw Error(ErrorCode::InvalidArgument, "atoms need finite values and positive weights");
  m.atoms_ = std::move(atoms);
  for (const auto& a : m.atoms_) m.total_mass_ += a.weight;
  return m;
}

MarkMeasure MarkMeasure::density(std::vector<PowerLawPiece> pieces) {
  MarkMeasure m;
  m.kind_ = Kind::Density;
  for (const auto& p : pieces) {
    if (!(p.hi > p.lo) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
      throw Error(ErrorCode::InvalidArgument, "density pieces need finite lo < hi");
    if (p.lo < 0.0 && p.hi > 0.0)
      throw Error(ErrorCode::InvalidArgument, "density piece straddles 0; split it");
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight) || !std::isfinite(p.exponent))
      throw Error(ErrorCode::InvalidArgument, "density weight must be finite and nonnegative");
  }
  m.pieces_ = std::move(pieces);
  std::stable_sort(m.pieces_.begin(), m.pieces_.end(),
                   [](const PowerLawPiece& a, const PowerLawPiece& b) { return a.lo < b.lo; });
  for (const auto& p : m.pieces_) m.total_mass_ += piece_mass(p);
  return m;
}

Region MarkMeasure::support() const {
  if (kind_ == Kind::Discrete) {
    std::vector<std::size_t> idx(atoms_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return Region::indices(std::move(idx));
  }
  std::vector<Interval> parts;
  for (const auto& p : pieces_) parts.push_back({p.lo, p.hi});
  return Region::intervals(std::move(parts));
}

std::vector<PowerLawPiece> MarkMeasure::clip(const Region& g) const {
  if (kind_ != Kind::Density) return {};
  if (g.is_all()) return pieces_;
  if (g.kind() != Region::Kind::Intervals)
    throw Error(ErrorCode::InvalidArgument, "index region used with a density measure");
  std::vector<PowerLawPiece> out;
  for (const auto& p : pieces_)
    for (const auto& i : g.parts()) {
      const double lo = std::max(p.lo, i.lo), hi = std::min(p.hi, i.hi);
      if (hi > lo) out.push_back({lo, hi, p.weight, p.exponent});
    }
  return out;
}

std::vector<std::size_t> MarkMeasure::atom_indices(const Region& g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].weight == 0.0) continue;
    const bool in = g.is_all() ||
                    (g.kind() == Region::Kind::Indices ? g.contains_index(i) : g.contains(atoms_[i].value));
    if (in) out.push_back(i);
  }
  return out;
}

double MarkMeasure::mass(const Region& g) const {
  double s = 0.0;
  if (kind_ == Kind::Discrete) {
    for (auto i : atom_indices(g)) s += atoms_[i].weight;
    return s;
  }
  for (const auto& p : clip(g)) s += piece_mass(p);
  return s;
}

MarkMeasure MarkMeasure::restricted(const Region& g) const {
  if (g.is_all()) return *this;
  if (kind_ == Kind::Discrete) {
    // Atoms outside g keep their slot with weight 0 so index regions stay valid.
    MarkMeasure r = *this;
    const auto keep = atom_indices(g);
    r.total_mass_ = 0.0;
    for (std::size_t i = 0; i < r.atoms_.size(); ++i) {
      if (!std::binary_search(keep.begin(), keep.end(), i)) r.atoms_[i].weight = 0.0;
      r.total_mass_ += r.atoms_[i].weight;
    }
    return r;
  }
  return density(clip(g));
}

double MarkMeasure::Sampler::draw(RngStream& rng) const {
  const double u = rng.uniform() * mass_;
  std::size_t k = std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin();
  if (k >= cum_.size()) k = cum_.size() - 1;
  if (!atoms_.empty()) return atoms_[k].value;
  const auto& p = pieces_[k];
  const double v = rng.uniform();
  if (p.lo >= 0.0) return positive_piece_draw(p.lo, p.hi, p.exponent, v);
  return -positive_piece_draw(-p.hi, -p.lo, p.exponent, v);
}

MarkMeasure::Sampler MarkMeasure::sampler(const Region& g) const {
  Sampler s;
  double acc = 0.0;
  if (kind_ == Kind::Discrete) {
    for (auto i : atom_indices(g)) {
      s.atoms_.push_back(atoms_[i]);
      acc += atoms_[i].weight;
      s.cum_.push_back(acc);
    }
  } else {
    for (const auto& p : clip(g)) {
      const double m = piece_mass(p);
      if (m == 0.0) continue;
      s.pieces_.push_back(p);
      acc += m;
      s.cum_.push_back(acc);
    }
  }
  if (!std::isfinite(acc)) throw Error(ErrorCode::InfiniteMass, "mu(G) is infinite on " + g.describe());
  s.mass_ = acc;
  return s;
}

double MarkMeasure::normalized_cdf(const Region& g, double z) const {
  const double total = mass(g);
  if (!std::isfinite(total)) throw Error(ErrorCode::InfiniteMass, "mu(G) is infinite");
  if (total == 0.0) throw Error(ErrorCode::InvalidArgument, "mu(G) = 0");
  double s = 0.0;
  if (kind_ == Kind::Discrete) {
    for (auto i : atom_indices(g))
      if (atoms_[i].value <= z) s += atoms_[i].weight;
    return s / total;
  }
  for (const auto& p : clip(g)) {
    if (p.lo >= 0.0) {
      s += positive_piece_partial(p.lo, p.hi, p.weight, p.exponent, z);
    } else {
      // mirrored: mass of (lo, min(z,hi)] = mass of [-min(z,hi), -lo)
      const double zc = std::clamp(z, p.lo, p.hi);
      s += positive_piece_mass(-zc, -p.lo, p.weight, p.exponent);
    }
  }
  return s / total;
}

std::vector<double> MarkMeasure::integrate_many(const MultiIntegrand& f, std::size_t m, const Region& g,
                                                const QuadratureOptions& opt) const {
  std::vector<double> out(m, 0.0), buf(m);
  if (kind_ == Kind::Discrete) {
    for (auto i : atom_indices(g)) {
      f(atoms_[i].value, buf);
      for (std::size_t k = 0; k < m; ++k) out[k] += atoms_[i].weight * buf[k];
    }
    return out;
  }
  for (const auto& p : clip(g)) {
    if (p.weight == 0.0) continue;
    auto part = hybridjump::integrate_many(
        [&](double z, std::span<double> o) {
          f(z, o);
          const double d = p.weight * std::pow(std::abs(z), p.exponent);
          for (auto& v : o) v *= d;
        },
        m, p.lo, p.hi, opt);
    for (std::size_t k = 0; k < m; ++k) out[k] += part[k];
  }
  return out;
}

double MarkMeasure::integrate(const std::function<double(double)>& f, const Region& g,
                              const QuadratureOptions& opt) const {
  return integrate_many([&](double z, std::span<double> o) { o[0] = f(z); }, 1, g, opt)[0];
}

std::vector<double> MarkMeasure::mark_grid(const Region& g, int n) const {
  std::vector<double> out;
  if (kind_ == Kind::Discrete) {
    for (auto i : atom_indices(g)) out.push_back(atoms_[i].value);
    return out;
  }
  for (const auto& p : clip(g)) {
    const double alo = p.lo >= 0.0 ? p.lo : -p.hi, ahi = p.lo >= 0.0 ? p.hi : -p.lo;
    const double base = alo > 0.0 ? alo : ahi * 1e-6;
    const bool geometric = ahi / base > 4.0;
    for (int k = 0; k < n; ++k) {
      const double s = (k + 1.0) / n;
      const double a = geometric ? base * std::pow(ahi / base, s) : alo + (ahi - alo) * s;
      out.push_back(p.lo >= 0.0 ? a : -a);
    }
  }
  return out;
}

// ---- Coefficients and models ---------------------------------------------

Mat CoefficientSet::a(double t, const Vec& x) const {
  if (covariance) return covariance(t, x);
  Mat m(dim);
  for (const auto& s : diffusion) {
    const Vec v = s(t, x);
    m += Mat::outer(v, v);
  }
  return m;
}

JumpModel::JumpModel(CoefficientSet coefficients, MarkMeasure measure, double horizon)
    : coef_(std::move(coefficients)), measure_(std::move(measure)), horizon_(horizon) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
    throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (!(coef_.rate_bound > 0.0) || !std::isfinite(coef_.rate_bound))
    throw Error(ErrorCode::InvalidArgument, "rate bound must be positive and finite");
  if (coef_.dim == 0 || coef_.dim > kMaxDim) throw Error(ErrorCode::InvalidArgument, "dimension out of range");
}

JumpModel JumpModel::restrict(const Region& g) const {
  if (g.is_all()) return *this;
  return JumpModel(coef_, measure_.restricted(g), horizon_);
}

JumpModel restrict(const JumpModel& m, const Region& g) { return m.restrict(g); }

Grid Grid::lattice(std::size_t d, double lo, double hi, int n, std::vector<double> times) {
  if (n < 1 || d == 0 || d > kMaxDim) throw Error(ErrorCode::InvalidArgument, "bad lattice shape");
  Grid g;
  g.times = std::move(times);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  for (std::size_t k = 0; k < total; ++k) {
    Vec x(d);
    std::size_t r = k;
    for (std::size_t i = 0; i < d; ++i) {
      const int j = static_cast<int>(r % n);
      r /= n;
      x[i] = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (n - 1);
    }
    g.states.push_back(x);
  }
  return g;
}

namespace {

void require_grid(const Grid& g) {
  if (g.times.empty() || g.states.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
}

struct GridPoint {
  double t;
  const Vec* x;
};

std::vector<GridPoint> points(const Grid& g) {
  std::vector<GridPoint> p;
  for (double t : g.times)
    for (const auto& x : g.states) p.push_back({t, &x});
  return p;
}

std::string where(double t, double z, const Vec& x) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << " z=" << z << " x=(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ")";
  return os.str();
}

// Evaluate c and gamma with the standing checks.
std::pair<Vec, double> checked(const CoefficientSet& c, double t, double z, const Vec& x) {
  const Vec cv = c.c(t, z, x);
  const double g = c.gamma(t, z, x);
  if (!cv.finite() || !std::isfinite(g))
    throw Error(ErrorCode::NonFiniteCoefficient, "c or gamma not finite at " + where(t, z, x));
  if (g < 0.0) throw Error(ErrorCode::RateBoundViolated, "negative gamma at " + where(t, z, x));
  if (g > c.rate_bound * (1.0 + 1e-12))
    throw Error(ErrorCode::RateBoundViolated, "gamma exceeds Gamma at " + where(t, z, x));
  return {cv, g};
}

}  // namespace

double alpha_of(const JumpModel& m, const Region& g, const Grid& grid, const QuadratureOptions& opt) {
  require_grid(grid);
  const auto pts = points(grid);
  const auto& coef = m.coefficients();
  auto vals = m.measure().integrate_many(
      [&](double z, std::span<double> out) {
        for (std::size_t k = 0; k < pts.size(); ++k) {
          auto [cv, gam] = checked(coef, pts[k].t, z, *pts[k].x);
          out[k] = cv.norm() * gam;
        }
      },
      pts.size(), g, opt);
  return *std::max_element(vals.begin(), vals.end());
}

CMuResult c_mu(const JumpModel& m, const Grid& grid, const QuadratureOptions& opt) {
  require_grid(grid);
  const auto pts = points(grid);
  const auto& coef = m.coefficients();
  const bool estimated = !coef.lipschitz_c || !coef.lipschitz_gamma;
  const std::size_t d = m.dim();

  // Difference-quotient estimate of the x-Lipschitz modulus of c and gamma at
  // mark z, maximized over the grid.
  auto estimate = [&](double z, double& lc, double& lg) {
    lc = lg = 0.0;
    for (const auto& p : pts) {
      const double h = coef.fd_step * (1.0 + p.x->norm());
      double jac_c = 0.0, grad_g = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        Vec xp = *p.x, xm = *p.x;
        xp[i] += h;
        xm[i] -= h;
        const Vec dc = (coef.c(p.t, z, xp) - coef.c(p.t, z, xm)) * (0.5 / h);
        const double dg = (coef.gamma(p.t, z, xp) - coef.gamma(p.t, z, xm)) * (0.5 / h);
        jac_c += dc.dot(dc);
        grad_g += dg * dg;
      }
      lc = std::max(lc, std::sqrt(jac_c));
      lg = std::max(lg, std::sqrt(grad_g));
    }
  };

  auto vals = m.measure().integrate_many(
      [&](double z, std::span<double> out) {
        double lc = 0.0, lg = 0.0;
        if (estimated) estimate(z, lc, lg);
        if (coef.lipschitz_c) lc = coef.lipschitz_c(z);
        if (coef.lipschitz_gamma) lg = coef.lipschitz_gamma(z);
        for (std::size_t k = 0; k < pts.size(); ++k) {
          auto [cv, gam] = checked(coef, pts[k].t, z, *pts[k].x);
          out[k] = lg * cv.norm() + lc * gam;
        }
      },
      pts.size(), Region::all(), opt);
  return {*std::max_element(vals.begin(), vals.end()), estimated};
}

ValidationReport validate_model(const JumpModel& m, const Grid& grid, const Region& g,
                                const QuadratureOptions& opt) {
  require_grid(grid);
  ValidationReport r;
  r.grid_points = grid.size();
  const auto& coef = m.coefficients();
  double sup_gamma = 0.0;
  for (double z : m.measure().mark_grid(g))
    for (const auto& p : points(grid)) sup_gamma = std::max(sup_gamma, checked(coef, p.t, z, *p.x).second);
  r.rate_margin = coef.rate_bound - sup_gamma;

  try {
    r.alpha = alpha_of(m, g, grid, opt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::QuadratureDivergence) throw;
    r.alpha = kInf;
    r.alpha_finite = false;
  }
  try {
    const auto cm = c_mu(m, grid, opt);
    r.c_mu = cm.value;
    r.c_mu_estimated = cm.estimated;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::QuadratureDivergence) throw;
    r.c_mu = kInf;
    r.c_mu_finite = false;
  }
  return r;
}

}  // namespace hybridjump
