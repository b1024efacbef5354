#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "hybridjump/bounds.hpp"
#include "hybridjump/cli.hpp"
#include "hybridjump/error.hpp"
#include "hybridjump/io.hpp"
#include "hybridjump/weakerr.hpp"

namespace hybridjump::cli {

namespace {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  const char* v = std::getenv("HYBRIDJUMP_LOG");
  if (!v) return LogLevel::Warn;
  const std::string s(v);
  if (s == "quiet" || s == "0") return LogLevel::Quiet;
  if (s == "info" || s == "2") return LogLevel::Info;
  if (s == "debug" || s == "3") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(std::ostream& err, LogLevel level, const std::string& msg) {
  if (level <= log_level()) err << "[hybridjump] " << msg << '\n';
}

std::filesystem::path output_file(const Options& opt, const std::string& name) {
  std::filesystem::create_directories(opt.out);
  return std::filesystem::path(opt.out) / name;
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
  return os;
}

Vec to_vec(const std::vector<double>& v) {
  Vec x(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) x[i] = v[i];
  return x;
}

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(format_double(x)); }

// --- simulate ------------------------------------------------------------------

int cmd_simulate(const RunConfig& rc, const Options& opt, std::ostream& out, std::ostream&) {
  const auto& sim = rc.simulation.sim;
  const JumpModel m = rc.model.build(sim.horizon);
  const Region g = rc.model.region();
  const Vec x0 = to_vec(rc.simulation.x0);
  if (x0.size() != m.dim())
    throw Error(ErrorCode::ConfigError, "/simulation/x0: dimension " + std::to_string(x0.size()) +
                                            " does not match the model dimension " + std::to_string(m.dim()));
  std::vector<PathRecord> paths(sim.paths);
  std::vector<std::exception_ptr> errors(sim.paths);
  const long n = static_cast<long>(sim.paths);
#pragma omp parallel for schedule(dynamic, 16) num_threads(rc.workers > 0 ? rc.workers : default_workers())
  for (long i = 0; i < n; ++i) {
    try {
      RngStream rng(sim.seed, static_cast<std::uint64_t>(i));
      paths[i] = simulate(m, g, x0, 0.0, sim, rng);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (long i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "path " + std::to_string(i) + ": " + e.what());
    }
  }
  const auto file = output_file(opt, "paths.jsonl");
  auto os = open_output(file);
  write_paths_jsonl(os, OutputHeader{rc.config_hash}, paths);
  std::size_t acc = 0, prop = 0;
  for (const auto& p : paths) {
    acc += p.accepted;
    prop += p.proposals;
  }
  out << "simulate: " << paths.size() << " paths (" << representation_name(sim.representation) << "), "
      << prop << " proposals, " << acc << " accepted -> " << file.string() << '\n';
  return kOk;
}

// --- weak-error -------------------------------------------------------------------

int cmd_weak_error(const RunConfig& rc, const Options& opt, std::ostream& out, std::ostream& err) {
  if (!rc.weak_error) throw Error(ErrorCode::ConfigError, "/weak_error: missing required field");
  const auto& w = *rc.weak_error;
  const TestFunction f = test_function_by_name(w.test_function);
  const Observable obs = [&f](const Vec& x) { return f(x); };
  SimConfig sim = rc.simulation.sim;
  sim.record = false;
  const Vec x0 = to_vec(rc.simulation.x0);

  sim.representation = w.reference_representation;
  sim.seed = rc.seed;
  const JumpModel ref = w.reference.build(sim.horizon);
  log(err, LogLevel::Info, "reference: " + w.reference.family);
  const auto reference = terminal_samples(ref, w.reference.region(), x0, obs, sim, rc.workers);

  WeakErrorReport rep;
  rep.parameter_name = w.parameter;
  rep.level = w.level;
  sim.representation = w.candidate_representation;
  for (std::size_t k = 0; k < w.values.size(); ++k) {
    ModelSpec spec = w.candidate;
    spec.set(w.parameter, w.values[k]);
    sim.seed = derive_seed(rc.seed, k);
    log(err, LogLevel::Info, w.parameter + " = " + format_double(w.values[k]));
    const auto samples = terminal_samples(spec.build(sim.horizon), spec.region(), x0, obs, sim, rc.workers);
    rep.rows.push_back({w.values[k], weak_error(samples, reference, w.level), sim.paths});
  }
  if (rep.rows.size() >= 3) rep.fit_rows();

  const auto file = output_file(opt, "weak_error.csv");
  auto os = open_output(file);
  CsvWriter csv(os, OutputHeader{rc.config_hash},
                {"parameter", "value", "error", "ci_low", "ci_high", "std_error", "n_a", "n_b", "fitted_rate"});
  const double slope = rep.fitted ? rep.fit.slope : std::nan("");
  for (const auto& r : rep.rows)
    csv.row({w.parameter, r.parameter, r.error.estimate, r.error.ci_low, r.error.ci_high, r.error.std_error,
             static_cast<std::uint64_t>(r.error.n_a), static_cast<std::uint64_t>(r.error.n_b), slope});
  out << "weak-error: " << rep.rows.size() << " rows";
  if (rep.fitted) out << ", fitted rate " << format_double(rep.fit.slope);
  out << " -> " << file.string() << '\n';
  return kOk;
}

// --- three-regimes -------------------------------------------------------------------

int cmd_three_regimes(const RunConfig& rc, const Options& opt, std::ostream& out, std::ostream& err) {
  const auto& t = rc.three_regimes;
  const TestFunction f = test_function_by_name(t.test_function);
  log(err, LogLevel::Info, "three-regimes: " + std::to_string(t.cfg.paths) + " paths per arm");
  const auto rep = three_regime_experiment(ThreeRegimeExample::standard(t.epsilons.front()), f, t.cfg, t.epsilons);
  const auto file = output_file(opt, "three_regimes.csv");
  auto os = open_output(file);
  CsvWriter csv(os, OutputHeader{rc.config_hash},
                {"epsilon", "error", "ci_low", "ci_high", "std_error", "n_paths", "fitted_rate", "fitted_rate_stderr",
                 "r_squared"});
  for (const auto& r : rep.rows)
    csv.row({r.parameter, r.error.estimate, r.error.ci_low, r.error.ci_high, r.error.std_error,
             static_cast<std::uint64_t>(r.n_paths), rep.fit.slope, rep.fit.slope_stderr, rep.fit.r_squared});
  out << "three-regimes: fitted rate " << format_double(rep.fit.slope) << " (stderr "
      << format_double(rep.fit.slope_stderr) << ", theory 0.5) -> " << file.string() << '\n';
  return kOk;
}

// --- boltzmann ---------------------------------------------------------------------------

int cmd_boltzmann(const RunConfig& rc, const Options& opt, std::ostream& out, std::ostream& err) {
  const auto& b = rc.boltzmann;
  const TestFunction f = test_function_by_name(b.test_function);
  log(err, LogLevel::Info, "boltzmann: order " + std::to_string(b.grid.front().order));
  const auto rep = boltzmann_experiment(b.grid, f, b.cfg);
  const auto file = output_file(opt, "boltzmann.csv");
  auto os = open_output(file);
  CsvWriter csv(os, OutputHeader{rc.config_hash},
                {"delta", "order", "error", "ci_low", "ci_high", "theoretical_exponent", "n_particles", "n_replicas"});
  for (const auto& r : rep.rows) {
    csv.row({r.delta, static_cast<std::int64_t>(r.order), r.error.estimate, r.error.ci_low, r.error.ci_high,
             r.theoretical_exponent, static_cast<std::uint64_t>(r.n_particles),
             static_cast<std::uint64_t>(r.n_replicas)});
    out << "boltzmann: delta " << format_double(r.delta) << " error " << format_double(r.error.estimate)
        << " fourth-moment drift " << format_double(r.fourth_moment_drift) << " acceptance "
        << format_double(r.acceptance) << '\n';
  }
  out << "boltzmann -> " << file.string() << '\n';
  return kOk;
}

// Interval regions from a config name atoms when the marks are discrete.
Region for_measure(const MarkMeasure& mu, const Region& r) {
  if (mu.kind() != MarkMeasure::Kind::Discrete || r.kind() != Region::Kind::Intervals) return r;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mu.atoms().size(); ++i)
    if (r.contains(mu.atoms()[i].value)) idx.push_back(i);
  return Region::indices(std::move(idx));
}

// --- constants -------------------------------------------------------------------------

int cmd_constants(const RunConfig& rc, const Options& opt, std::ostream& out, std::ostream& err) {
  const auto& c = rc.constants;
  const JumpModel m = c.model.build(c.horizon);
  const Region g = for_measure(m.measure(), c.model.region());
  const Grid grid = Grid::lattice(m.dim(), c.grid_lo, c.grid_hi, c.grid_n, c.times);
  RegularityOptions ro;
  ro.q = c.q;
  ro.p = c.p;
  ro.horizon = c.horizon;
  ro.c_universal = c.c_universal;
  ro.workers = rc.workers;
  log(err, LogLevel::Info, "constants: " + std::to_string(grid.size()) + " grid points");
  const auto report = regularity_report(m, g, grid, ro);
  const auto vr = validate_model(m, grid, g);

  nlohmann::json j;
  j["header"] = OutputHeader{rc.config_hash}.record();
  j["model"] = c.model.family;
  j["regularity"] = report.to_json();
  j["validation"] = {{"rate_margin", num(vr.rate_margin)}, {"c_mu", num(vr.c_mu)},
                     {"c_mu_estimated", vr.c_mu_estimated}, {"alpha", num(vr.alpha)},
                     {"grid_points", vr.grid_points}};
  if (c.inner) {
    const Region outer = c.outer ? for_measure(m.measure(), *c.outer) : g;
    const auto lb = localization_bound(m, for_measure(m.measure(), *c.inner), outer, c.horizon, c.c_universal, c.gap, grid);
    j["localization"] = {{"value", num(lb.value)},         {"alpha_difference", num(lb.alpha_difference)},
                         {"sigma_grad", num(lb.sigma_grad)}, {"drift_grad", num(lb.drift_grad)},
                         {"c_mu", num(lb.c_mu)},             {"c_mu_estimated", lb.c_mu_estimated},
                         {"gap", num(lb.gap)},               {"horizon", num(lb.horizon)},
                         {"c_universal", num(lb.c_universal)}};
  }
  const auto file = output_file(opt, "constants.json");
  auto os = open_output(file);
  os << j.dump(2) << '\n';
  out << "constants: log_Q " << format_double(report.log_Q) << " -> " << file.string() << '\n';
  return kOk;
}

// --- validate ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double value;
  double tolerance;
  bool passed;
};

std::vector<double> counts_of(const JumpModel& m, const Region& g, const Vec& x0, SimConfig sim, bool accepted) {
  sim.record = false;
  std::vector<double> out(sim.paths);
  for (std::size_t i = 0; i < sim.paths; ++i) {
    RngStream rng(sim.seed, i);
    const auto p = simulate(m, g, x0, 0.0, sim, rng);
    out[i] = static_cast<double>(accepted ? p.accepted : p.proposals);
  }
  return out;
}

std::vector<Check> validation_suite(const RunConfig& rc) {
  std::vector<Check> checks;
  const double pmin = rc.validate.p_threshold;

  // kernel normalization of the real-shock law on a 10 x 10 (t, x) grid
  for (const auto& nm : reference_models(1.0)) {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i)
      for (int k = 0; k < 10; ++k) {
        const double t = 0.1 * i, x = -2.0 + 4.0 * k / 9.0;
        const auto km = real_shock_kernel(nm.model, nm.region, t, Vec{x});
        worst = std::max(worst, std::abs(km.sentinel + km.jump - 1.0));
      }
    checks.push_back({"kernel_normalization/" + nm.name, worst, 1e-10, worst <= 1e-10});
  }

  // Poisson structure of the proposals and, for a constant rate, of the jumps
  DiscreteToy flat;
  flat.rate_bound = 3.0;
  flat.constant_rate = 1.2;
  const JumpModel pm = discrete_toy(flat, 1.5);
  SimConfig sim;
  sim.horizon = 1.5;
  sim.paths = rc.validate.paths;
  sim.seed = derive_seed(rc.seed, 101);
  {
    const auto c = counts_of(pm, Region::all(), Vec{0.0}, sim, false);
    std::vector<std::uint64_t> u(c.begin(), c.end());
    const auto r = chi_square_poisson(u, 2.0 * 3.0 * 2.0 * 1.5);
    checks.push_back({"poisson_proposals", r.p_value, pmin, r.p_value > pmin});
  }
  {
    const auto c = counts_of(pm, Region::all(), Vec{0.0}, sim, true);
    std::vector<std::uint64_t> u(c.begin(), c.end());
    const auto r = chi_square_poisson(u, 1.2 * 2.0 * 1.5);
    checks.push_back({"poisson_accepted", r.p_value, pmin, r.p_value > pmin});
  }

  // fictive and real representations have the same law
  {
    const JumpModel m = discrete_toy({}, 1.0);
    SimConfig s;
    s.horizon = 1.0;
    s.paths = rc.validate.paths;
    s.record = false;
    const Observable id = [](const Vec& x) { return x[0]; };
    s.seed = derive_seed(rc.seed, 201);
    s.representation = Representation::Fictive;
    const auto a = terminal_samples(m, Region::all(), Vec{0.3}, id, s, rc.workers);
    s.seed = derive_seed(rc.seed, 202);
    s.representation = Representation::Real;
    const auto b = terminal_samples(m, Region::all(), Vec{0.3}, id, s, rc.workers);
    const auto r = ks_two_sample(a, b);
    checks.push_back({"law_equality_ks", r.p_value, pmin, r.p_value > pmin});
  }

  // quadrature oracles
  {
    const auto ex = ThreeRegimeExample::standard(0.01);
    const auto mu = ex.source_measure();
    const double q = mu.integrate([](double) { return 1.0; }, Region::all());
    const double rel = std::abs(q / ex.total_mass_closed_form() - 1.0);
    checks.push_back({"three_regime_mass", rel, 1e-10, rel <= 1e-10});
    const double bal = std::abs(mu.integrate([&](double z) { return ex.shape(z); }, Region::interval(0.01, 0.03)));
    checks.push_back({"alpha_balancing", bal, 1e-10, bal <= 1e-10});
  }
  {
    const double nu = 0.5, d = 0.1, hi = 0.5 * std::numbers::pi;
    const double q = 2.0 * integrate([nu](double t) { return std::pow(t, -1.0 - nu); }, d, hi);
    const double rel = std::abs(theta_region_mass(nu, d, hi) / q - 1.0);
    checks.push_back({"theta_region_mass", rel, 1e-10, rel <= 1e-10});
  }
  {
    BoltzmannParams p = BoltzmannParams::first_order(0.3, 0.1, 0.1, 0.75);
    p.r = std::log(0.01) / std::log(p.delta);  // eps = 0.01
    const CutoffFunction phi(p.epsilon(), p.gamma_eps());
    const double x = 1.0;  // inside [3 eps, Gamma_eps - eps]
    const double e1 = std::abs(phi(x) - x), e2 = std::abs(phi(0.005) - 0.02);
    checks.push_back({"cutoff_identity_region", e1, 1e-12, e1 <= 1e-12});
    checks.push_back({"cutoff_clamp_region", e2, 1e-12, e2 <= 1e-12});
  }
  return checks;
}

int cmd_validate(const RunConfig& rc, const Options& opt, std::ostream& out, std::ostream&) {
  const auto checks = validation_suite(rc);
  const auto file = output_file(opt, "validate.csv");
  auto os = open_output(file);
  CsvWriter csv(os, OutputHeader{rc.config_hash}, {"check", "value", "threshold", "passed"});
  bool ok = true;
  for (const auto& c : checks) {
    csv.row({c.name, c.value, c.tolerance, std::string(c.passed ? "true" : "false")});
    out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.name << " value "
        << format_double(c.value) << " threshold " << format_double(c.tolerance) << '\n';
    ok = ok && c.passed;
  }
  out << "validate: " << (ok ? "all checks passed" : "failures present") << " -> " << file.string() << '\n';
  return ok ? kOk : kAcceptance;
}

nlohmann::json load_config(const std::optional<std::string>& path) {
  if (!path) return nlohmann::json::object();
  std::ifstream is(*path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot open config " + *path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, *path + ": " + e.what());
  }
}

}  // namespace

int run(const Options& opt, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig rc = parse_config(load_config(opt.config_path), opt.seed, opt.workers);
    log(err, LogLevel::Debug, "config hash " + hex64(rc.config_hash));
    if (opt.subcommand == "simulate") return cmd_simulate(rc, opt, out, err);
    if (opt.subcommand == "weak-error") return cmd_weak_error(rc, opt, out, err);
    if (opt.subcommand == "three-regimes") return cmd_three_regimes(rc, opt, out, err);
    if (opt.subcommand == "boltzmann") return cmd_boltzmann(rc, opt, out, err);
    if (opt.subcommand == "constants") return cmd_constants(rc, opt, out, err);
    if (opt.subcommand == "validate") return cmd_validate(rc, opt, out, err);
    err << "error: unknown subcommand '" << opt.subcommand << "'\n";
    return kConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kConfig : kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"hybridjump: Monte Carlo and weak-error toolkit for jump diffusions with state-dependent intensity"};
  Options opt;
  std::string config;
  std::uint64_t seed = 0;
  int workers = 0;
  auto* c = app.add_option("--config", config, "JSON config file");
  auto* s = app.add_option("--seed", seed, "base seed (overrides the config)");
  auto* w = app.add_option("--workers", workers, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--out", opt.out, "output directory");
  app.require_subcommand(1, 1);
  const std::vector<std::pair<std::string, std::string>> subs{
      {"simulate", "simulate paths and write JSONL"},
      {"weak-error", "weak error of a parameter sweep against a reference model"},
      {"three-regimes", "weak-error rate of the three-regime example"},
      {"boltzmann", "cutoff Boltzmann vs small-angle hybrid particle experiment"},
      {"constants", "regularity constants and localization bound"},
      {"validate", "invariant suite; exit 3 on failure"}};
  for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  opt.subcommand = app.get_subcommands().front()->get_name();
  if (*c) opt.config_path = config;
  if (*s) opt.seed = seed;
  if (*w) opt.workers = workers;
  return run(opt, std::cout, std::cerr);
}

}  // namespace hybridjump::cli
