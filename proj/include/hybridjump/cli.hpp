#pragma once

// Config-driven front end. Configs are JSON; every section is validated
// against its schema before any computation, and unknown keys are rejected
// with their field path.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridjump/boltzmann.hpp"
#include "hybridjump/generator.hpp"
#include "hybridjump/model.hpp"
#include "hybridjump/reference.hpp"
#include "hybridjump/regimes.hpp"
#include "hybridjump/simulate.hpp"

namespace hybridjump::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kConfig = 2, kAcceptance = 3 };

// Read-only view of one JSON object that remembers which keys were read.
class ConfigNode {
 public:
  ConfigNode(const nlohmann::json& j, std::string path);

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  ConfigNode child(const std::string& key) const;
  const nlohmann::json& raw(const std::string& key) const;

  // ConfigError naming the first key that was never read.
  void finish() const;

 private:
  const nlohmann::json& at(const std::string& key) const;
  std::string where(const std::string& key) const { return path_ + "/" + key; }

  const nlohmann::json* j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

struct ModelSpec {
  std::string family = "discrete_toy";  // discrete_toy | three_regime | three_regime_limit
  double epsilon = 0.01;
  double floor = 1e-4;
  DiscreteToy toy;

  JumpModel build(double horizon) const;
  Region region() const;
  void set(const std::string& parameter, double value);
};

struct SimulationSpec {
  SimConfig sim;
  std::vector<double> x0{0.0};
};

struct WeakErrorSpec {
  ModelSpec reference;
  Representation reference_representation = Representation::Fictive;
  ModelSpec candidate;
  Representation candidate_representation = Representation::Fictive;
  std::string parameter = "epsilon";
  std::vector<double> values;
  std::string test_function = "sin";
  double level = 0.99;
};

struct ThreeRegimeSpec {
  std::vector<double> epsilons{0.02, 0.01, 0.005, 0.0025};
  ThreeRegimeConfig cfg;
  std::string test_function = "sin";
};

struct BoltzmannSpec {
  std::vector<BoltzmannParams> grid;
  BoltzmannExperimentConfig cfg;
  std::string test_function = "gaussian_bump";
};

struct ConstantsSpec {
  ModelSpec model;
  double grid_lo = -2.0, grid_hi = 2.0;
  int grid_n = 9;
  std::vector<double> times{0.0};
  int q = 1;
  int p = 0;
  double horizon = 1.0;
  double c_universal = 1.0;
  std::optional<Region> inner, outer;
  double gap = 1.0;
};

struct ValidateSpec {
  std::size_t paths = 10000;
  double p_threshold = 0.01;
};

struct RunConfig {
  std::string description;
  std::uint64_t seed = 1;
  int workers = 0;
  ModelSpec model;
  SimulationSpec simulation;
  std::optional<WeakErrorSpec> weak_error;
  ThreeRegimeSpec three_regimes;
  BoltzmannSpec boltzmann;
  ConstantsSpec constants;
  ValidateSpec validate;
  std::uint64_t config_hash = 0;
};

// Parses and validates; throws Error(ConfigError) with the field path.
RunConfig parse_config(const nlohmann::json& j, std::optional<std::uint64_t> seed_override,
                       std::optional<int> workers_override);
TestFunction test_function_by_name(const std::string& name);
Representation representation_by_name(const std::string& name, const std::string& path);

struct Options {
  std::string subcommand;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out = ".";
};

// Runs one subcommand; returns the exit code. Messages go to out/err.
int run(const Options& opt, std::ostream& out, std::ostream& err);
int main_entry(int argc, char** argv);

}  // namespace hybridjump::cli
