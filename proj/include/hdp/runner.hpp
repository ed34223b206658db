#pragma once

// Config-driven runs: integrate the reduced and/or full system, reconstruct
// the group variable, and write trajectories plus a diagnostics summary.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "hdp/acceptance.hpp"
#include "hdp/io.hpp"

namespace hdp {

inline constexpr const char* kOutputDirEnv = "HDP_OUTPUT_DIR";

enum ExitCode { kExitOk = 0, kExitFailed = 1, kExitConfig = 2, kExitAlarm = 3 };

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> files;
  std::string message;
};

inline std::string output_directory(const RunConfig& c) {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? std::string(env) : c.output_dir;
}

template <class State>
Json trajectory_summary(const Trajectory<State>& t) {
  Json j;
  j["ok"] = t.ok;
  j["error"] = t.ok ? "" : to_string(t.error);
  j["message"] = t.message;
  j["samples"] = t.size();
  double res = 0.0, drift = 0.0, cons = 0.0, edrift = 0.0;
  for (const auto& d : t.diagnostics) {
    res = std::max(res, d.solve_residual);
    drift = std::max(drift, d.drift);
    cons = std::max(cons, d.constraint);
    if (!t.diagnostics.empty()) edrift = std::max(edrift, std::abs(d.energy - t.diagnostics.front().energy));
  }
  j["max_solve_residual"] = res;
  j["max_drift_before_projection"] = drift;
  j["max_constraint_residual"] = cons;
  if (!t.diagnostics.empty()) {
    j["energy_initial"] = t.diagnostics.front().energy;
    j["energy_final"] = t.diagnostics.back().energy;
  }
  j["max_energy_deviation"] = edrift;
  return j;
}

namespace detail {

inline std::string write_file(const std::filesystem::path& dir, const std::string& name,
                              const std::function<void(std::ostream&)>& body) {
  const std::filesystem::path path = dir / name;
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write '" + path.string() + "'");
  body(out);
  return path.string();
}

}  // namespace detail

inline RunOutcome run_verify(std::optional<ScenarioId> only, std::ostream& log) {
  RunOutcome o;
  bool all = true;
  for (const auto& r : acceptance::run_all(only)) {
    log << acceptance::format(r) << '\n';
    all = all && r.passed;
  }
  o.exit_code = all ? kExitOk : kExitFailed;
  o.message = all ? "all acceptance criteria passed" : "acceptance failures";
  return o;
}

inline RunOutcome run(const RunConfig& c, std::ostream& log) {
  if (c.mode == RunMode::verify) return run_verify(std::nullopt, log);
  RunOutcome o;
  const Scenario sc = make_scenario(c);
  const FullState s0 = initial_state(sc, c);
  const std::filesystem::path dir = output_directory(c);
  std::filesystem::create_directories(dir);
  const std::string pre = c.output_prefix;

  Json diag;
  diag["scenario"] = to_string(c.scenario);
  diag["mode"] = to_string(c.mode);
  diag["dt"] = c.integrator.dt;
  diag["T"] = c.integrator.T;
  diag["method"] = to_string(c.integrator.method);
  diag["action_side"] = to_string(c.side);
  diag["case"] = to_string(c.rcase);
  diag["connection"] = c.connection;
  bool alarm = false;

  std::optional<Trajectory<FullState>> full;
  std::optional<Trajectory<ReducedState>> reduced;
  if (c.mode == RunMode::full || c.mode == RunMode::both) {
    full = integrate(full_system(sc), s0, c.integrator);
    o.files.push_back(detail::write_file(dir, pre + "full.csv", [&](std::ostream& out) { write_trajectory(out, *full); }));
    diag["full"] = trajectory_summary(*full);
    alarm = alarm || !full->ok;
  }
  if (c.mode == RunMode::reduced || c.mode == RunMode::both) {
    reduced = integrate(reduced_system(sc), reduce(sc, s0), c.integrator);
    o.files.push_back(
        detail::write_file(dir, pre + "reduced.csv", [&](std::ostream& out) { write_trajectory(out, *reduced); }));
    diag["reduced"] = trajectory_summary(*reduced);
    alarm = alarm || !reduced->ok;
    try {
      const auto Cs = reconstruct_group(*reduced, s0.C, sc.reduced.A, sc.reduced.h);
      Trajectory<FullState> rec;
      rec.t = reduced->t;
      for (std::size_t i = 0; i < reduced->size(); ++i) {
        rec.states.push_back(atiyah_cotangent_inverse(reduced->states[i], sc.reduced.A, Cs[i]));
      }
      o.files.push_back(
          detail::write_file(dir, pre + "reconstructed.csv", [&](std::ostream& out) { write_trajectory(out, rec); }));
      double ortho = 0.0;
      for (const Mat3& C : Cs) ortho = std::max(ortho, orthonormality_error(C));
      diag["reconstruction_max_orthonormality_error"] = ortho;
    } catch (const Error& e) {
      diag["reconstruction_error"] = e.what();
      alarm = true;
    }
  }
  if (full && reduced) {
    const std::size_t n = std::min(full->size(), reduced->size());
    double worst = 0.0;
    o.files.push_back(detail::write_file(dir, pre + "deviation.csv", [&](std::ostream& out) {
      out << "t,deviation\n";
      for (std::size_t i = 0; i < n; ++i) {
        const double d = state_distance(reduce(sc, full->states[i]), reduced->states[i]);
        worst = std::max(worst, d);
        out << format_double(full->t[i]) << ',' << format_double(d) << '\n';
      }
    }));
    diag["max_deviation"] = worst;
  }
  diag["alarm"] = alarm;
  o.files.push_back(detail::write_file(dir, pre + "diagnostics.json", [&](std::ostream& out) { out << diag.dump(2) << '\n'; }));
  o.exit_code = alarm ? kExitAlarm : kExitOk;
  o.message = alarm ? "run stopped by an alarm; partial outputs written" : "run complete";
  log << o.message << '\n';
  return o;
}

/// Loads, validates and runs a config file; configuration problems map to
/// exit code 2 before anything is written.
inline RunOutcome run_file(const std::string& path, std::ostream& log) {
  RunConfig c;
  try {
    c = load_config(path);
    if (c.mode != RunMode::verify) {
      const Scenario sc = make_scenario(c);
      initial_state(sc, c);
    }
  } catch (const Error& e) {
    log << e.what() << '\n';
    return {kExitConfig, {}, e.what()};
  }
  try {
    return run(c, log);
  } catch (const Error& e) {
    log << e.what() << '\n';
    return {e.kind() == ErrorKind::ConfigError ? kExitConfig : kExitAlarm, {}, e.what()};
  }
}

}  // namespace hdp
