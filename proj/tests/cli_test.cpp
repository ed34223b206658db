#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_util.hpp"
#include "hdp/runner.hpp"

using namespace hdp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hdp_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int cli(const std::string& args, const fs::path& capture, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + HDP_CLI_PATH + "\" " + args + " > \"" +
                          capture.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_json(const fs::path& out, const std::string& scenario, const std::string& extra = "") {
  return "{\"scenario\": \"" + scenario + "\", \"integrator\": {\"dt\": 0.001, \"T\": 1.0}, " +
         "\"output\": {\"directory\": \"" + out.string() + "\"}" + extra + "}";
}

RunConfig parse(const std::string& text) { return parse_config(Json::parse(text)); }

void expect_config_error(const std::string& text) {
  try {
    parse(text);
    FAIL() << "expected ConfigError for " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << text;
  }
}

}  // namespace

TEST(ParseConfig, DefaultsForMinimalConfig) {
  const RunConfig c = parse(R"({"scenario": "ball_dalembert"})");
  EXPECT_EQ(c.scenario, ScenarioId::ball_dalembert);
  EXPECT_EQ(c.mode, RunMode::both);
  EXPECT_EQ(c.integrator.dt, 1e-3);
  EXPECT_EQ(c.integrator.T, 1.0);
  EXPECT_EQ(c.integrator.method, Method::rk4);
  EXPECT_EQ(c.params.g, 9.81);
  EXPECT_EQ(c.side, ActionSide::right);
  EXPECT_EQ(c.rcase, ReductionCase::trivial_connection);
  EXPECT_EQ(c.initial.seed, 1u);
  EXPECT_EQ(c.connection, "trivial");
}

TEST(ParseConfig, ReadsEveryField) {
  const RunConfig c = parse(R"({
    "scenario": "ball_hocs",
    "params": {"r1": 2, "r2": 0.5, "I1": 3, "I2": 0.2, "m2": 1.5, "g": 1},
    "lyapunov": {"phi_diagonal": [1,1,1,2,2,2,3,3,3], "potential": "none", "mu_rate_coefficient": 0.5},
    "integrator": {"dt": 0.01, "T": 2, "method": "euler", "project": false, "drift_alarm": 1e-5},
    "initial": {"seed": 7, "spread": {"pi": 1, "gamma": 0.1, "sigma": 0.2, "tilt": 0.3}, "project": false},
    "mode": "reduced",
    "output": {"directory": "runs", "prefix": "a_"},
    "action_side": "left",
    "case": "general",
    "connection": "gnc"})");
  EXPECT_EQ(c.params.r1, 2.0);
  EXPECT_EQ(c.params.m2, 1.5);
  ASSERT_TRUE(c.lyapunov.has_value());
  EXPECT_EQ(c.lyapunov->phi_diagonal[8], 3.0);
  EXPECT_EQ(c.lyapunov->potential, "none");
  EXPECT_EQ(c.integrator.method, Method::euler);
  EXPECT_FALSE(c.integrator.project);
  EXPECT_EQ(c.integrator.drift_alarm, 1e-5);
  EXPECT_EQ(c.initial.seed, 7u);
  EXPECT_EQ(c.initial.spread.tilt, 0.3);
  EXPECT_FALSE(c.initial.project);
  EXPECT_EQ(c.mode, RunMode::reduced);
  EXPECT_EQ(c.output_dir, "runs");
  EXPECT_EQ(c.output_prefix, "a_");
  EXPECT_EQ(c.side, ActionSide::left);
  EXPECT_EQ(c.rcase, ReductionCase::general);
  EXPECT_EQ(c.connection, "gnc");
}

TEST(ParseConfig, ScenarioDefaultSpreadIsApplied) {
  EXPECT_EQ(parse(R"({"scenario": "ball_hocs"})").initial.spread.pi, default_spread(ScenarioId::ball_hocs).pi);
  EXPECT_EQ(parse(R"({"scenario": "free"})").initial.spread.pi, default_spread(ScenarioId::free).pi);
}

TEST(ParseConfig, RejectsInvalidInput) {
  expect_config_error(R"({})");
  expect_config_error(R"({"scenario": "ball"})");
  expect_config_error(R"({"scenario": "free", "unknown": 1})");
  expect_config_error(R"({"scenario": "free", "params": {"r1": 0.1}})");
  expect_config_error(R"({"scenario": "free", "params": {"radius": 1}})");
  expect_config_error(R"({"scenario": "free", "integrator": {"dt": 0}})");
  expect_config_error(R"({"scenario": "free", "integrator": {"dt": 0.1, "T": 0.01}})");
  expect_config_error(R"({"scenario": "free", "integrator": {"method": "rk45"}})");
  expect_config_error(R"({"scenario": "free", "integrator": {"dt": "fast"}})");
  expect_config_error(R"({"scenario": "free", "mode": "all"})");
  expect_config_error(R"({"scenario": "free", "initial": {"seed": -1}})");
  expect_config_error(R"({"scenario": "free", "initial": {"state": {"e": [0, 0, 2]}}})");
  expect_config_error(R"({"scenario": "free", "lyapunov": {}})");
  expect_config_error(R"({"scenario": "ball_hocs", "gamma_inertia": [1, 1, 1]})");
  expect_config_error(R"({"scenario": "ball_hocs", "lyapunov": {"phi_diagonal": [1, 1]}})");
  expect_config_error(R"({"scenario": "ball_hocs", "lyapunov": {"phi_diagonal": [1,1,1,1,1,1,1,1,-1]}})");
  expect_config_error(R"({"scenario": "ball_hocs", "connection": "gnc"})");
  expect_config_error(R"({"scenario": "ball_hocs", "action_side": "up"})");
}

TEST(Trajectories, CsvRoundTripIsExact) {
  const Scenario sc = ball_hocs(BallParams{});
  IntegratorConfig cfg;
  cfg.T = 0.02;
  const FullState s0 = random_state(sc, 1, default_spread(sc.id));
  const auto full = integrate(full_system(sc), s0, cfg);
  const auto red = integrate(reduced_system(sc), reduce(sc, s0), cfg);
  std::stringstream a, b;
  write_trajectory(a, full);
  write_trajectory(b, red);
  const auto full2 = read_trajectory<FullState>(a);
  const auto red2 = read_trajectory<ReducedState>(b);
  ASSERT_EQ(full2.size(), full.size());
  ASSERT_EQ(red2.size(), red.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    EXPECT_EQ(full2.t[i], full.t[i]);
    EXPECT_EQ(state_distance(full2.states[i], full.states[i]), 0.0);
    EXPECT_EQ(state_distance(red2.states[i], red.states[i]), 0.0);
  }
}

TEST(Trajectories, HeaderColumnOrder) {
  const auto full = full_columns();
  ASSERT_EQ(full.size(), 31u);
  EXPECT_EQ(full[0], "t");
  EXPECT_EQ(full[1], "R00");
  EXPECT_EQ(full[2], "R01");
  EXPECT_EQ(full[10], "pi0");
  EXPECT_EQ(full[13], "e0");
  EXPECT_EQ(full[16], "sigma0");
  EXPECT_EQ(full[19], "C00");
  EXPECT_EQ(full[28], "gamma0");
  const auto red = reduced_columns();
  ASSERT_EQ(red.size(), 22u);
  EXPECT_EQ(red[19], "mu0");
}

TEST(Cli, RunBothModeMatchesAndIsReproducible) {
  const fs::path dir = scratch("both");
  const fs::path out1 = dir / "out1", out2 = dir / "out2";
  write(dir / "a.json", config_json(out1, "ball_hocs"));
  write(dir / "b.json", config_json(out2, "ball_hocs"));
  ASSERT_EQ(cli("run \"" + (dir / "a.json").string() + "\"", dir / "log1"), 0) << slurp(dir / "log1");
  ASSERT_EQ(cli("run \"" + (dir / "b.json").string() + "\"", dir / "log2"), 0) << slurp(dir / "log2");
  for (const char* f : {"full.csv", "reduced.csv", "reconstructed.csv", "deviation.csv", "diagnostics.json"}) {
    ASSERT_TRUE(fs::exists(out1 / f)) << f;
    EXPECT_EQ(slurp(out1 / f), slurp(out2 / f)) << f;
  }
  const Json diag = Json::parse(slurp(out1 / "diagnostics.json"));
  EXPECT_LE(diag.at("max_deviation").get<double>(), 1e-6);
  EXPECT_FALSE(diag.at("alarm").get<bool>());
  EXPECT_EQ(diag.at("full").at("samples").get<int>(), 1001);
  std::ifstream dev(out1 / "deviation.csv");
  std::string line;
  std::getline(dev, line);
  EXPECT_EQ(line, "t,deviation");
  double worst = 0.0;
  while (std::getline(dev, line)) worst = std::max(worst, std::stod(line.substr(line.find(',') + 1)));
  EXPECT_LE(worst, 1e-6);
  std::ifstream red(out1 / "reduced.csv");
  const auto traj = read_trajectory<ReducedState>(red);
  EXPECT_EQ(traj.size(), 1001u);
}

TEST(Cli, OneConnectionRunMatchesFullSpace) {
  const fs::path dir = scratch("gnc");
  write(dir / "c.json", config_json(dir / "out", "ball_dalembert",
                                    R"(, "case": "general", "connection": "gnc", "integrator": {"dt": 0.001, "T": 0.1})"));
  ASSERT_EQ(cli("run \"" + (dir / "c.json").string() + "\"", dir / "log"), 0) << slurp(dir / "log");
  const Json diag = Json::parse(slurp(dir / "out" / "diagnostics.json"));
  EXPECT_LE(diag.at("max_deviation").get<double>(), 1e-6);
}

TEST(Cli, MalformedConfigWritesNothing) {
  const fs::path dir = scratch("malformed");
  const fs::path out = dir / "out";
  write(dir / "bad.json", "{\"scenario\": \"ball_hocs\", \"output\": {\"directory\": \"" + out.string() + "\"}");
  EXPECT_EQ(cli("run \"" + (dir / "bad.json").string() + "\"", dir / "log"), 2);
  EXPECT_FALSE(fs::exists(out));
  write(dir / "invalid.json", config_json(out, "ball_hocs", R"(, "params": {"r2": 5})"));
  EXPECT_EQ(cli("run \"" + (dir / "invalid.json").string() + "\"", dir / "log"), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(cli("run \"" + (dir / "missing.json").string() + "\"", dir / "log"), 2);
  EXPECT_EQ(cli("bogus", dir / "log"), 2);
}

TEST(Cli, OutputDirectoryOverride) {
  const fs::path dir = scratch("env");
  write(dir / "c.json", config_json(dir / "configured", "free",
                                    R"(, "mode": "reduced", "integrator": {"dt": 0.01, "T": 0.1})"));
  const fs::path target = dir / "override";
  ASSERT_EQ(cli("run \"" + (dir / "c.json").string() + "\"", dir / "log", "HDP_OUTPUT_DIR=\"" + target.string() + "\""),
            0)
      << slurp(dir / "log");
  EXPECT_TRUE(fs::exists(target / "reduced.csv"));
  EXPECT_TRUE(fs::exists(target / "diagnostics.json"));
  EXPECT_FALSE(fs::exists(target / "full.csv"));
  EXPECT_FALSE(fs::exists(dir / "configured"));
}

TEST(Cli, PrintSchema) {
  const fs::path dir = scratch("schema");
  ASSERT_EQ(cli("print-schema", dir / "schema.json"), 0);
  const Json schema = Json::parse(slurp(dir / "schema.json"));
  EXPECT_EQ(schema, config_schema());
  for (const char* key : {"scenario", "params", "integrator", "initial", "mode", "output"}) {
    EXPECT_TRUE(schema.at("properties").contains(key)) << key;
  }
}

TEST(Cli, VerifySuitePasses) {
  const fs::path dir = scratch("verify");
  ASSERT_EQ(cli("verify", dir / "log"), 0) << slurp(dir / "log");
  const std::string log = slurp(dir / "log");
  for (int i = 1; i <= 10; ++i) EXPECT_NE(log.find("AC" + std::to_string(i) + " "), std::string::npos);
  EXPECT_EQ(log.find("FAIL"), std::string::npos);
  EXPECT_EQ(cli("verify --scenario ball_dalembert", dir / "log2"), 0) << slurp(dir / "log2");
  EXPECT_EQ(cli("verify --scenario nowhere", dir / "log3"), 2);
}

TEST(Cli, VerifyModeInConfig) {
  const fs::path dir = scratch("verify_mode");
  write(dir / "v.json", R"({"scenario": "ball_hocs", "mode": "verify"})");
  EXPECT_EQ(cli("run \"" + (dir / "v.json").string() + "\"", dir / "log"), 0) << slurp(dir / "log");
}
