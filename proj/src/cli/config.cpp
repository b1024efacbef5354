#include <cmath>
#include <limits>

#include "hybridjump/cli.hpp"
#include "hybridjump/error.hpp"
#include "hybridjump/io.hpp"

namespace hybridjump::cli {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string type_name(const nlohmann::json& j) { return j.type_name(); }

}  // namespace

ConfigNode::ConfigNode(const nlohmann::json& j, std::string path) : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) config_error((path_.empty() ? "/" : path_) + ": expected an object, got " + type_name(j));
}

bool ConfigNode::has(const std::string& key) const { return j_->contains(key); }

const nlohmann::json& ConfigNode::at(const std::string& key) const {
  auto it = j_->find(key);
  if (it == j_->end()) config_error(where(key) + ": missing required field");
  used_.insert(key);
  return *it;
}

const nlohmann::json& ConfigNode::raw(const std::string& key) const { return at(key); }

double ConfigNode::number(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number()) config_error(where(key) + ": expected a number, got " + type_name(v));
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(where(key) + ": must be finite");
  return d;
}

double ConfigNode::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t ConfigNode::integer(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (!v.is_number_integer()) config_error(where(key) + ": expected an integer, got " + type_name(v));
  return v.get<std::int64_t>();
}

std::uint64_t ConfigNode::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    config_error(where(key) + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool ConfigNode::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (!v.is_boolean()) config_error(where(key) + ": expected a boolean, got " + type_name(v));
  return v.get<bool>();
}

std::string ConfigNode::string(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_string()) config_error(where(key) + ": expected a string, got " + type_name(v));
  return v.get<std::string>();
}

std::string ConfigNode::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::vector<double> ConfigNode::numbers(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_array()) config_error(where(key) + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) config_error(where(key) + "/" + std::to_string(i) + ": expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<double> ConfigNode::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

ConfigNode ConfigNode::child(const std::string& key) const { return ConfigNode(at(key), where(key)); }

void ConfigNode::finish() const {
  for (auto it = j_->begin(); it != j_->end(); ++it)
    if (!used_.count(it.key())) config_error(where(it.key()) + ": unknown key");
}

// --- named objects ------------------------------------------------------------

TestFunction test_function_by_name(const std::string& name) {
  if (name == "sin") return sine_function();
  if (name == "cos") return cosine_function();
  if (name == "gaussian_bump") return gaussian_bump();
  if (name == "quadratic") return quadratic_function();
  if (name == "constant") return constant_function(1.0);
  config_error("unknown test function '" + name + "' (sin, cos, gaussian_bump, quadratic, constant)");
}

Representation representation_by_name(const std::string& name, const std::string& path) {
  if (name == "fictive") return Representation::Fictive;
  if (name == "real") return Representation::Real;
  if (name == "hybrid") return Representation::Hybrid;
  config_error(path + ": unknown representation '" + name + "' (fictive, real, hybrid)");
}

JumpModel ModelSpec::build(double horizon) const {
  if (family == "discrete_toy") return discrete_toy(toy, horizon);
  if (family == "three_regime") return ThreeRegimeExample::standard(epsilon).source(horizon);
  if (family == "three_regime_limit") return ThreeRegimeExample::standard(0.01).limit_truncated(horizon, floor);
  config_error("unknown model family '" + family + "'");
}

Region ModelSpec::region() const {
  if (family == "three_regime_limit") return Region::interval(floor, 1.0);
  return Region::all();
}

void ModelSpec::set(const std::string& parameter, double value) {
  if (family == "three_regime" && parameter == "epsilon") {
    epsilon = value;
  } else if (family == "three_regime_limit" && parameter == "floor") {
    floor = value;
  } else if (family == "discrete_toy" && parameter == "rate_bound") {
    toy.rate_bound = value;
  } else if (family == "discrete_toy" && parameter == "drift") {
    toy.drift = value;
  } else if (family == "discrete_toy" && parameter == "sigma") {
    toy.sigma = value;
  } else if (family == "discrete_toy" && parameter == "amplitude") {
    toy.amplitude = value;
  } else if (family == "discrete_toy" && parameter == "constant_rate") {
    toy.constant_rate = value;
  } else {
    config_error("parameter '" + parameter + "' is not defined for family '" + family + "'");
  }
}

namespace {

ModelSpec parse_model(const ConfigNode& n) {
  ModelSpec m;
  m.family = n.string("family");
  if (m.family == "discrete_toy") {
    if (n.has("atoms")) {
      const auto& a = n.raw("atoms");
      if (!a.is_array() || a.empty()) config_error(n.path() + "/atoms: expected a nonempty array of [value, weight]");
      m.toy.atoms.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_array() || a[i].size() != 2 || !a[i][0].is_number() || !a[i][1].is_number())
          config_error(n.path() + "/atoms/" + std::to_string(i) + ": expected [value, weight]");
        m.toy.atoms.push_back({a[i][0].get<double>(), a[i][1].get<double>()});
      }
    }
    m.toy.rate_bound = n.number("rate_bound", m.toy.rate_bound);
    m.toy.drift = n.number("drift", m.toy.drift);
    m.toy.sigma = n.number("sigma", m.toy.sigma);
    m.toy.amplitude = n.number("amplitude", m.toy.amplitude);
    if (n.has("constant_rate")) m.toy.constant_rate = n.number("constant_rate");
  } else if (m.family == "three_regime") {
    m.epsilon = n.number("epsilon", m.epsilon);
    if (!(m.epsilon > 0.0 && m.epsilon <= 0.25)) config_error(n.path() + "/epsilon: must lie in (0, 1/4]");
  } else if (m.family == "three_regime_limit") {
    m.floor = n.number("floor", m.floor);
    if (!(m.floor > 0.0 && m.floor < 1.0)) config_error(n.path() + "/floor: must lie in (0, 1)");
  } else {
    config_error(n.path() + "/family: unknown model family '" + m.family +
                 "' (discrete_toy, three_regime, three_regime_limit)");
  }
  n.finish();
  return m;
}

void check_positive(double v, const std::string& path) {
  if (!(v > 0.0)) config_error(path + ": must be positive");
}

SimulationSpec parse_simulation(const ConfigNode& n, std::uint64_t seed) {
  SimulationSpec s;
  s.sim.seed = seed;
  s.sim.horizon = n.number("horizon", 1.0);
  check_positive(s.sim.horizon, n.path() + "/horizon");
  s.sim.step = n.number("step", 1e-3);
  check_positive(s.sim.step, n.path() + "/step");
  s.sim.paths = n.unsigned_integer("paths", 100);
  if (s.sim.paths == 0) config_error(n.path() + "/paths: must be at least 1");
  s.sim.representation = representation_by_name(n.string("representation", "fictive"), n.path() + "/representation");
  s.sim.record = n.boolean("record", true);
  if (n.has("dominating_bound")) s.sim.dominating_bound = n.number("dominating_bound");
  s.x0 = n.numbers("x0", s.x0);
  if (s.x0.empty() || s.x0.size() > kMaxDim) config_error(n.path() + "/x0: dimension must be in [1, 8]");
  n.finish();
  return s;
}

Region parse_region(const ConfigNode& parent, const std::string& key) {
  const auto& v = parent.raw(key);
  const std::string path = parent.path() + "/" + key;
  if (v.is_string() && v.get<std::string>() == "all") return Region::all();
  if (!v.is_array()) config_error(path + ": expected \"all\" or an array of [lo, hi]");
  std::vector<Interval> parts;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_number() || !v[i][1].is_number())
      config_error(path + "/" + std::to_string(i) + ": expected [lo, hi]");
    parts.push_back({v[i][0].get<double>(), v[i][1].get<double>()});
  }
  return Region::intervals(std::move(parts));
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j, std::optional<std::uint64_t> seed_override,
                       std::optional<int> workers_override) {
  const ConfigNode root(j, "");
  RunConfig rc;
  rc.description = root.string("description", "");
  rc.seed = seed_override.value_or(root.unsigned_integer("seed", 1));
  const std::int64_t w = root.integer("workers", 0);
  rc.workers = workers_override.value_or(static_cast<int>(w));
  if (rc.workers < 0) config_error("/workers: must be >= 0");

  if (root.has("model")) rc.model = parse_model(root.child("model"));
  rc.simulation = root.has("simulation") ? parse_simulation(root.child("simulation"), rc.seed)
                                         : parse_simulation(ConfigNode(nlohmann::json::object(), "/simulation"),
                                                            rc.seed);

  if (root.has("weak_error")) {
    const auto n = root.child("weak_error");
    WeakErrorSpec w;
    w.reference = parse_model(n.child("reference"));
    w.reference_representation =
        representation_by_name(n.string("reference_representation", "fictive"), n.path() + "/reference_representation");
    w.candidate = parse_model(n.child("candidate"));
    w.candidate_representation =
        representation_by_name(n.string("candidate_representation", "fictive"), n.path() + "/candidate_representation");
    w.parameter = n.string("parameter");
    w.values = n.numbers("values");
    if (w.values.empty()) config_error(n.path() + "/values: need at least one value");
    for (double v : w.values) {
      ModelSpec probe = w.candidate;
      probe.set(w.parameter, v);
    }
    w.test_function = n.string("test_function", w.test_function);
    test_function_by_name(w.test_function);
    w.level = n.number("level", w.level);
    if (!(w.level > 0.0 && w.level < 1.0)) config_error(n.path() + "/level: must lie in (0,1)");
    n.finish();
    rc.weak_error = w;
  }

  {
    ThreeRegimeSpec& t = rc.three_regimes;
    t.cfg.seed = rc.seed;
    t.cfg.workers = rc.workers;
    if (root.has("three_regimes")) {
      const auto n = root.child("three_regimes");
      t.epsilons = n.numbers("epsilons", t.epsilons);
      if (t.epsilons.size() < 3) config_error(n.path() + "/epsilons: need at least three values");
      for (double e : t.epsilons)
        if (!(e > 0.0 && e <= 0.25)) config_error(n.path() + "/epsilons: values must lie in (0, 1/4]");
      t.cfg.horizon = n.number("horizon", t.cfg.horizon);
      check_positive(t.cfg.horizon, n.path() + "/horizon");
      t.cfg.step = n.number("step", t.cfg.step);
      check_positive(t.cfg.step, n.path() + "/step");
      t.cfg.paths = n.unsigned_integer("paths", t.cfg.paths);
      if (t.cfg.paths < 2) config_error(n.path() + "/paths: need at least two paths");
      t.cfg.x0 = n.number("x0", t.cfg.x0);
      t.cfg.floor = n.number("floor", t.cfg.floor);
      if (!(t.cfg.floor > 0.0 && t.cfg.floor < 1.0)) config_error(n.path() + "/floor: must lie in (0,1)");
      t.cfg.level = n.number("level", t.cfg.level);
      if (!(t.cfg.level > 0.0 && t.cfg.level < 1.0)) config_error(n.path() + "/level: must lie in (0,1)");
      t.test_function = n.string("test_function", t.test_function);
      test_function_by_name(t.test_function);
      n.finish();
    }
  }

  {
    BoltzmannSpec& b = rc.boltzmann;
    b.cfg.seed = rc.seed;
    b.cfg.workers = rc.workers;
    BoltzmannParams base = BoltzmannParams::first_order(0.3, 0.1, 0.1);
    std::vector<double> deltas{0.4, 0.2, 0.1};
    std::optional<double> r;
    int order = 1;
    if (root.has("boltzmann")) {
      const auto n = root.child("boltzmann");
      order = static_cast<int>(n.integer("order", 1));
      if (order != 1 && order != 2) config_error(n.path() + "/order: must be 1 or 2");
      base.nu = n.number("nu");
      base.kappa = n.number("kappa");
      base.eta0 = n.number("eta0", base.eta0);
      if (n.has("r")) r = n.number("r");
      deltas = n.numbers("deltas", deltas);
      base.theta_floor = n.number("theta_floor", base.theta_floor);
      base.step = n.number("step", base.step);
      base.initial_std = n.number("initial_std", base.initial_std);
      base.checkpoints = static_cast<int>(n.integer("checkpoints", base.checkpoints));
      b.cfg.horizon = n.number("horizon", b.cfg.horizon);
      check_positive(b.cfg.horizon, n.path() + "/horizon");
      b.cfg.particles = n.unsigned_integer("particles", b.cfg.particles);
      b.cfg.replicas = n.unsigned_integer("replicas", b.cfg.replicas);
      if (b.cfg.particles < 2) config_error(n.path() + "/particles: need at least two");
      if (b.cfg.replicas < 2) config_error(n.path() + "/replicas: need at least two");
      b.cfg.level = n.number("level", b.cfg.level);
      b.test_function = n.string("test_function", b.test_function);
      test_function_by_name(b.test_function);
      n.finish();
    }
    if (deltas.empty()) config_error("/boltzmann/deltas: need at least one value");
    for (double d : deltas) {
      BoltzmannParams p = base;
      p.delta = d;
      p.order = order;
      p.r = r.value_or(order == 1 ? BoltzmannParams::first_order_r(p.nu, p.kappa)
                                  : 0.9 * BoltzmannParams::second_order_r_max(p.nu, p.kappa));
      try {
        p.validate();
      } catch (const Error& e) {
        config_error("/boltzmann: " + std::string(e.what()));
      }
      b.grid.push_back(p);
    }
  }

  {
    ConstantsSpec& c = rc.constants;
    c.model = rc.model;
    if (root.has("constants")) {
      const auto n = root.child("constants");
      if (n.has("model")) c.model = parse_model(n.child("model"));
      c.grid_lo = n.number("grid_lo", c.grid_lo);
      c.grid_hi = n.number("grid_hi", c.grid_hi);
      c.grid_n = static_cast<int>(n.integer("grid_n", c.grid_n));
      if (!(c.grid_hi > c.grid_lo) || c.grid_n < 1) config_error(n.path() + ": need grid_lo < grid_hi, grid_n >= 1");
      c.times = n.numbers("times", c.times);
      c.q = static_cast<int>(n.integer("q", c.q));
      if (c.q < 1 || c.q > 4) config_error(n.path() + "/q: must lie in [1, 4]");
      c.p = static_cast<int>(n.integer("p", c.p));
      c.horizon = n.number("horizon", c.horizon);
      check_positive(c.horizon, n.path() + "/horizon");
      c.c_universal = n.number("c_universal", c.c_universal);
      if (n.has("inner")) c.inner = parse_region(n, "inner");
      if (n.has("outer")) c.outer = parse_region(n, "outer");
      c.gap = n.number("gap", c.gap);
      n.finish();
    }
  }

  if (root.has("validate")) {
    const auto n = root.child("validate");
    rc.validate.paths = n.unsigned_integer("paths", rc.validate.paths);
    if (rc.validate.paths < 100) config_error(n.path() + "/paths: need at least 100");
    rc.validate.p_threshold = n.number("p_threshold", rc.validate.p_threshold);
    n.finish();
  }
  root.finish();

  // The hash identifies everything that can change the output: the worker
  // count cannot, so it is left out.
  nlohmann::json canon = j;
  canon.erase("workers");
  canon["seed"] = rc.seed;
  rc.config_hash = fnv1a64(canon.dump());
  return rc;
}

}  // namespace hybridjump::cli
