#include <iostream>

#include "CLI11.hpp"

#include "hdp/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reduced and full-space simulation of constrained Hamiltonian systems on trivial bundles"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run a configuration file");
  run->add_option("config", config, "Path to the JSON configuration")->required();

  std::string scenario;
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--scenario", scenario, "Restrict to one scenario (ball_hocs, ball_dalembert, free)");

  app.add_subcommand("print-schema", "Print the configuration JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hdp::kExitConfig;
  }

  if (app.got_subcommand("print-schema")) {
    std::cout << hdp::config_schema().dump(2) << '\n';
    return 0;
  }
  if (app.got_subcommand("verify")) {
    std::optional<hdp::ScenarioId> only;
    if (!scenario.empty()) {
      try {
        only = hdp::scenario_from_string(scenario);
      } catch (const hdp::Error& e) {
        std::cerr << e.what() << '\n';
        return hdp::kExitConfig;
      }
    }
    return hdp::run_verify(only, std::cout).exit_code;
  }
  return hdp::run_file(config, std::cerr).exit_code;
}
