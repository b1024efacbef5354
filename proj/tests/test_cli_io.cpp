#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hybridjump/cli.hpp"
#include "hybridjump/error.hpp"
#include "hybridjump/io.hpp"

using namespace hybridjump;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hj_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& sub, const std::string& config, const std::string& out, std::string* err_text = nullptr,
            std::optional<int> workers = std::nullopt) {
  cli::Options o;
  o.subcommand = sub;
  if (!config.empty()) o.config_path = config;
  o.out = out;
  o.workers = workers;
  std::ostringstream so, se;
  const int code = cli::run(o, so, se);
  if (err_text) *err_text = se.str();
  return code;
}

}  // namespace

TEST(Io, ShortestRoundTripFormatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Io, CsvHeaderAndArity) {
  std::ostringstream os;
  CsvWriter w(os, OutputHeader{0xabcULL}, {"a", "b"});
  w.row({1.5, std::string("x")});
  EXPECT_THROW(w.row({1.0}), Error);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("# hybridjump ", 0), 0u);
  EXPECT_NE(s.find("config_hash=0000000000000abc"), std::string::npos);
  EXPECT_NE(s.find("a,b\n1.5,x\n"), std::string::npos);
}

TEST(Config, UnknownKeyAndMissingField) {
  try {
    (void)cli::parse_config(nlohmann::json::parse(R"({"simulation": {"pathz": 3}})"), {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("/simulation/pathz"), std::string::npos);
  }
  try {
    (void)cli::parse_config(nlohmann::json::parse(R"({"boltzmann": {"kappa": 0.1}})"), {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/boltzmann/nu"), std::string::npos);
  }
}

TEST(Config, HashIgnoresWorkersButNotSeed) {
  const auto j = nlohmann::json::parse(R"({"seed": 4, "workers": 2})");
  const auto a = cli::parse_config(j, {}, {});
  const auto b = cli::parse_config(j, {}, 7);
  const auto c = cli::parse_config(j, 5, {});
  EXPECT_EQ(a.config_hash, b.config_hash);
  EXPECT_NE(a.config_hash, c.config_hash);
  EXPECT_EQ(b.workers, 7);
  EXPECT_EQ(c.seed, 5u);
}

TEST(Config, ConstraintViolationIsConfigError) {
  EXPECT_THROW((void)cli::parse_config(nlohmann::json::parse(R"({"boltzmann": {"nu": 0.3, "kappa": 0.3}})"), {}, {}),
               Error);
}

TEST(Cli, MalformedConfigExitsTwo) {
  TempDir d;
  std::string err;
  EXPECT_EQ(run_cli("boltzmann", d.write("c.json", R"({"boltzmann": {"kappa": 0.1}})"), d.path.string(), &err), 2);
  EXPECT_NE(err.find("/boltzmann/nu"), std::string::npos);
  EXPECT_EQ(run_cli("simulate", d.write("bad.json", "{not json"), d.path.string()), 2);
  EXPECT_EQ(run_cli("simulate", (d.path / "missing.json").string(), d.path.string()), 2);
}

TEST(Cli, ValidatePasses) {
  TempDir d;
  EXPECT_EQ(run_cli("validate", d.write("c.json", R"({"validate": {"paths": 4000}})"), d.path.string()), 0);
  const std::string csv = slurp(d.path / "validate.csv");
  EXPECT_EQ(csv.find(",false"), std::string::npos);
  EXPECT_NE(csv.find("kernel_normalization/discrete_toy"), std::string::npos);
}

TEST(Cli, SimulateIsByteIdenticalAcrossRunsAndWorkers) {
  TempDir d;
  const auto cfg = d.write("c.json", R"({"seed": 9, "model": {"family": "discrete_toy", "sigma": 0.2},
                                          "simulation": {"paths": 50, "horizon": 1.0, "step": 0.05}})");
  ASSERT_EQ(run_cli("simulate", cfg, (d.path / "a").string(), nullptr, 1), 0);
  ASSERT_EQ(run_cli("simulate", cfg, (d.path / "b").string(), nullptr, 4), 0);
  const std::string a = slurp(d.path / "a" / "paths.jsonl"), b = slurp(d.path / "b" / "paths.jsonl");
  EXPECT_EQ(a, b);
  const auto first = nlohmann::json::parse(a.substr(0, a.find('\n')));
  EXPECT_EQ(first["type"], "header");
  EXPECT_EQ(first["version"], library_version());
}

TEST(Cli, ThreeRegimesCsvShape) {
  TempDir d;
  const auto cfg = d.write("c.json", R"({"three_regimes": {"paths": 400, "step": 0.02}})");
  ASSERT_EQ(run_cli("three-regimes", cfg, d.path.string()), 0);
  std::istringstream is(slurp(d.path / "three_regimes.csv"));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# hybridjump", 0), 0u);
  std::getline(is, line);
  EXPECT_EQ(line, "epsilon,error,ci_low,ci_high,std_error,n_paths,fitted_rate,fitted_rate_stderr,r_squared");
  int rows = 0;
  while (std::getline(is, line)) rows += !line.empty();
  EXPECT_EQ(rows, 4);
}

TEST(Cli, WeakErrorSweep) {
  TempDir d;
  const auto cfg = d.write("c.json", R"({
    "simulation": {"paths": 300, "horizon": 0.5, "step": 0.05},
    "weak_error": {"reference": {"family": "discrete_toy"},
                   "candidate": {"family": "discrete_toy"},
                   "parameter": "amplitude", "values": [0.6, 0.55, 0.52]}})");
  ASSERT_EQ(run_cli("weak-error", cfg, d.path.string()), 0);
  EXPECT_NE(slurp(d.path / "weak_error.csv").find("amplitude,0.55,"), std::string::npos);
}

TEST(Cli, ConstantsJson) {
  TempDir d;
  const auto cfg =
      d.write("c.json", R"({"constants": {"model": {"family": "discrete_toy"}, "grid_n": 5, "inner": [[-1.5, 0]]}})");
  ASSERT_EQ(run_cli("constants", cfg, d.path.string()), 0);
  const auto j = nlohmann::json::parse(slurp(d.path / "constants.json"));
  EXPECT_TRUE(j.contains("regularity"));
  EXPECT_TRUE(j.contains("localization"));
  EXPECT_EQ(j["header"]["version"], library_version());
}
