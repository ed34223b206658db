#pragma once

// Run configuration (JSON), trajectory tables (CSV, 17 significant digits)
// and their exact parse-back.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hdp/scenarios.hpp"

namespace hdp {

using Json = nlohmann::json;

enum class RunMode { reduced, full, both, verify };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::reduced: return "reduced";
    case RunMode::full: return "full";
    case RunMode::both: return "both";
    case RunMode::verify: return "verify";
  }
  return "unknown";
}

struct LyapunovConfig {
  std::vector<double> phi_diagonal = std::vector<double>(9, 1.0);
  std::string potential = "tilt";  // tilt: m2 g (1 − e·z); none: 0
  double mu_rate_coefficient = 0.1;
};

struct InitialConfig {
  std::uint64_t seed = 1;
  InitialSpread spread;
  std::optional<FullState> state;
  bool project = true;
};

struct RunConfig {
  ScenarioId scenario = ScenarioId::ball_hocs;
  BallParams params;
  std::optional<LyapunovConfig> lyapunov;
  Vec3 gamma_inertia = Vec3::Constant(0.1);
  bool gamma_inertia_set = false;
  IntegratorConfig integrator;
  InitialConfig initial;
  RunMode mode = RunMode::both;
  std::string output_dir = "out";
  std::string output_prefix;
  ActionSide side = ActionSide::right;
  ReductionCase rcase = ReductionCase::trivial_connection;
  std::string connection = "trivial";  // trivial | gnc
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) config_error("unknown key '" + k + "' in " + where);
  }
}

inline double number(const Json& j, const std::string& key, double def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number()) config_error("'" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::string text(const Json& j, const std::string& key, const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string()) config_error("'" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

inline std::vector<double> numbers(const Json& j, const std::string& key, std::size_t n) {
  const Json& a = j.at(key);
  if (!a.is_array() || a.size() != n) config_error("'" + key + "' must be an array of " + std::to_string(n));
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) config_error("'" + key + "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Vec3 vec3(const Json& j, const std::string& key) {
  const auto v = numbers(j, key, 3);
  return {v[0], v[1], v[2]};
}

inline Mat3 mat3(const Json& j, const std::string& key) {
  const auto v = numbers(j, key, 9);
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[static_cast<std::size_t>(i)];
  return m;
}

}  // namespace detail

/// Parses and validates a configuration; every failure is a ConfigError.
inline RunConfig parse_config(const Json& j) {
  using namespace detail;
  check_keys(j, "config", {"scenario", "params", "lyapunov", "gamma_inertia", "integrator", "initial", "mode",
                           "output", "action_side", "case", "connection"});
  RunConfig c;
  if (!j.contains("scenario")) config_error("missing 'scenario'");
  c.scenario = scenario_from_string(text(j, "scenario", ""));
  if (j.contains("params")) {
    const Json& p = j.at("params");
    check_keys(p, "params", {"r1", "r2", "I1", "I2", "m2", "g"});
    c.params.r1 = number(p, "r1", c.params.r1);
    c.params.r2 = number(p, "r2", c.params.r2);
    c.params.I1 = number(p, "I1", c.params.I1);
    c.params.I2 = number(p, "I2", c.params.I2);
    c.params.m2 = number(p, "m2", c.params.m2);
    c.params.g = number(p, "g", c.params.g);
  }
  c.params.validate();
  c.gamma_inertia = Vec3::Constant(c.params.I2);
  if (j.contains("gamma_inertia")) {
    if (c.scenario != ScenarioId::free) config_error("'gamma_inertia' applies to the free scenario only");
    c.gamma_inertia = vec3(j, "gamma_inertia");
    c.gamma_inertia_set = true;
    if (!(c.gamma_inertia.minCoeff() > 0.0)) config_error("gamma_inertia must be positive");
  }
  if (j.contains("lyapunov")) {
    if (c.scenario != ScenarioId::ball_hocs) config_error("'lyapunov' applies to ball_hocs only");
    const Json& l = j.at("lyapunov");
    check_keys(l, "lyapunov", {"phi_diagonal", "potential", "mu_rate_coefficient"});
    LyapunovConfig lc;
    if (l.contains("phi_diagonal")) lc.phi_diagonal = numbers(l, "phi_diagonal", 9);
    for (double d : lc.phi_diagonal) {
      if (!(d > 0.0)) config_error("phi_diagonal must be positive");
    }
    lc.potential = text(l, "potential", lc.potential);
    if (lc.potential != "tilt" && lc.potential != "none") config_error("potential must be 'tilt' or 'none'");
    lc.mu_rate_coefficient = number(l, "mu_rate_coefficient", lc.mu_rate_coefficient);
    if (!(lc.mu_rate_coefficient >= 0.0)) config_error("mu_rate_coefficient must be non-negative");
    c.lyapunov = lc;
  }
  if (j.contains("integrator")) {
    const Json& i = j.at("integrator");
    check_keys(i, "integrator", {"dt", "T", "method", "project", "drift_alarm"});
    c.integrator.dt = number(i, "dt", c.integrator.dt);
    c.integrator.T = number(i, "T", c.integrator.T);
    c.integrator.drift_alarm = number(i, "drift_alarm", c.integrator.drift_alarm);
    const std::string m = text(i, "method", "rk4");
    if (m == "rk4") c.integrator.method = Method::rk4;
    else if (m == "euler") c.integrator.method = Method::euler;
    else config_error("method must be 'rk4' or 'euler'");
    if (i.contains("project")) {
      if (!i.at("project").is_boolean()) config_error("'project' must be a boolean");
      c.integrator.project = i.at("project").get<bool>();
    }
  }
  c.integrator.validate();
  c.initial.spread = default_spread(c.scenario);
  if (j.contains("initial")) {
    const Json& i = j.at("initial");
    check_keys(i, "initial", {"seed", "spread", "state", "project"});
    if (i.contains("seed")) {
      if (!i.at("seed").is_number_unsigned()) config_error("'seed' must be a non-negative integer");
      c.initial.seed = i.at("seed").get<std::uint64_t>();
    }
    if (i.contains("spread")) {
      const Json& s = i.at("spread");
      check_keys(s, "spread", {"pi", "gamma", "sigma", "tilt"});
      c.initial.spread.pi = number(s, "pi", c.initial.spread.pi);
      c.initial.spread.gamma = number(s, "gamma", c.initial.spread.gamma);
      c.initial.spread.sigma = number(s, "sigma", c.initial.spread.sigma);
      c.initial.spread.tilt = number(s, "tilt", c.initial.spread.tilt);
    }
    if (i.contains("state")) {
      const Json& s = i.at("state");
      check_keys(s, "state", {"R", "pi", "e", "sigma", "C", "gamma"});
      FullState st;
      if (s.contains("R")) st.R = mat3(s, "R");
      if (s.contains("C")) st.C = mat3(s, "C");
      if (s.contains("pi")) st.pi = vec3(s, "pi");
      if (s.contains("e")) st.e = vec3(s, "e");
      if (s.contains("sigma")) st.sigma = vec3(s, "sigma");
      if (s.contains("gamma")) st.gamma = vec3(s, "gamma");
      if (!is_rotation(st.R, 1e-6) || !is_rotation(st.C, 1e-6)) config_error("initial R and C must be rotations");
      if (std::abs(st.e.norm() - 1.0) > 1e-6) config_error("initial e must be a unit vector");
      c.initial.state = st;
    }
    if (i.contains("project")) {
      if (!i.at("project").is_boolean()) config_error("'project' must be a boolean");
      c.initial.project = i.at("project").get<bool>();
    }
  }
  const std::string mode = text(j, "mode", "both");
  if (mode == "reduced") c.mode = RunMode::reduced;
  else if (mode == "full") c.mode = RunMode::full;
  else if (mode == "both") c.mode = RunMode::both;
  else if (mode == "verify") c.mode = RunMode::verify;
  else config_error("mode must be reduced, full, both or verify");
  if (j.contains("output")) {
    const Json& o = j.at("output");
    check_keys(o, "output", {"directory", "prefix"});
    c.output_dir = text(o, "directory", c.output_dir);
    c.output_prefix = text(o, "prefix", c.output_prefix);
  }
  const std::string side = text(j, "action_side", "right");
  if (side == "right") c.side = ActionSide::right;
  else if (side == "left") c.side = ActionSide::left;
  else config_error("action_side must be 'left' or 'right'");
  const std::string rc = text(j, "case", "trivial_connection");
  if (rc == "general") c.rcase = ReductionCase::general;
  else if (rc == "trivial_connection") c.rcase = ReductionCase::trivial_connection;
  else if (rc == "flat_base") c.rcase = ReductionCase::flat_base;
  else config_error("case must be general, trivial_connection or flat_base");
  c.connection = text(j, "connection", c.connection);
  if (c.connection != "trivial" && c.connection != "gnc") config_error("connection must be 'trivial' or 'gnc'");
  if (c.connection == "gnc" && c.rcase != ReductionCase::general) {
    config_error("connection 'gnc' requires case 'general'");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed config: ") + e.what());
  }
  return parse_config(j);
}

inline LyapunovSpec make_lyapunov(const BallParams& p, const LyapunovConfig& lc) {
  LyapunovSpec l = default_lyapunov(p, lc.mu_rate_coefficient);
  Vec9 d;
  for (int i = 0; i < 9; ++i) d(i) = lc.phi_diagonal[static_cast<std::size_t>(i)];
  l.phi = [d](const BasePoint&) { return Mat9(d.asDiagonal()); };
  if (lc.potential == "none") {
    l.v = [](const BasePoint&) { return 0.0; };
    l.dv = [](const BasePoint&) { return BaseCovector{}; };
  }
  return l;
}

/// The scenario described by a config, with the reduction options applied.
inline Scenario make_scenario(const RunConfig& c) {
  std::optional<LyapunovSpec> l;
  if (c.lyapunov) l = make_lyapunov(c.params, *c.lyapunov);
  Scenario sc = make_scenario(c.scenario, c.params, l, c.gamma_inertia);
  sc.reduced.side = c.side;
  sc.reduced.rcase = c.rcase;
  if (c.connection == "gnc") sc.reduced = rebase(sc.reduced, sc.reduced.A_gnc);
  sc.reduced.validate();
  return sc;
}

inline FullState initial_state(const Scenario& sc, const RunConfig& c) {
  if (!c.initial.state) return random_state(sc, c.initial.seed, c.initial.spread);
  FullState s = *c.initial.state;
  if (c.initial.project) {
    s = project_manifold(s);
    for (const auto& k : sc.full.constraints) {
      if (k.project) s = k.project(s);
    }
  }
  if (full_constraint_drift(sc, s) > 1e-6) {
    throw Error(ErrorKind::ConfigError, "initial state violates the kinematic constraints");
  }
  return s;
}

// ---- CSV ----------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> full_columns() {
  std::vector<std::string> c{"t"};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.push_back("R" + std::to_string(i) + std::to_string(k));
  for (const char* n : {"pi", "e", "sigma"})
    for (int i = 0; i < 3; ++i) c.push_back(n + std::to_string(i));
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.push_back("C" + std::to_string(i) + std::to_string(k));
  for (int i = 0; i < 3; ++i) c.push_back("gamma" + std::to_string(i));
  return c;
}

inline std::vector<std::string> reduced_columns() {
  std::vector<std::string> c{"t"};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.push_back("R" + std::to_string(i) + std::to_string(k));
  for (const char* n : {"pi", "e", "sigma", "mu"})
    for (int i = 0; i < 3; ++i) c.push_back(n + std::to_string(i));
  return c;
}

inline std::vector<double> flatten(const FullState& s) {
  std::vector<double> v;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) v.push_back(s.R(i, k));
  for (const Vec3* x : {&s.pi, &s.e, &s.sigma}) v.insert(v.end(), x->data(), x->data() + 3);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) v.push_back(s.C(i, k));
  v.insert(v.end(), s.gamma.data(), s.gamma.data() + 3);
  return v;
}

inline std::vector<double> flatten(const ReducedState& s) {
  std::vector<double> v;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) v.push_back(s.x.R(i, k));
  for (const Vec3* x : {&s.pi, &s.x.e, &s.sigma, &s.mu}) v.insert(v.end(), x->data(), x->data() + 3);
  return v;
}

template <class State>
State unflatten(const std::vector<double>& v);

template <>
inline FullState unflatten<FullState>(const std::vector<double>& v) {
  FullState s;
  std::size_t k = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.R(i, j) = v[k++];
  for (Vec3* x : {&s.pi, &s.e, &s.sigma})
    for (int i = 0; i < 3; ++i) (*x)(i) = v[k++];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.C(i, j) = v[k++];
  for (int i = 0; i < 3; ++i) s.gamma(i) = v[k++];
  return s;
}

template <>
inline ReducedState unflatten<ReducedState>(const std::vector<double>& v) {
  ReducedState s;
  std::size_t k = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.x.R(i, j) = v[k++];
  for (Vec3* x : {&s.pi, &s.x.e, &s.sigma, &s.mu})
    for (int i = 0; i < 3; ++i) (*x)(i) = v[k++];
  return s;
}

template <class State>
std::vector<std::string> columns_for();
template <>
inline std::vector<std::string> columns_for<FullState>() { return full_columns(); }
template <>
inline std::vector<std::string> columns_for<ReducedState>() { return reduced_columns(); }

template <class State>
void write_trajectory(std::ostream& out, const Trajectory<State>& traj) {
  const auto cols = columns_for<State>();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (std::size_t n = 0; n < traj.size(); ++n) {
    out << format_double(traj.t[n]);
    for (double v : flatten(traj.states[n])) out << ',' << format_double(v);
    out << '\n';
  }
}

template <class State>
Trajectory<State> read_trajectory(std::istream& in) {
  const auto cols = columns_for<State>();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ConfigError, "empty trajectory file");
  std::string expected;
  for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
  if (line != expected) throw Error(ErrorKind::ConfigError, "unexpected trajectory header");
  Trajectory<State> traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (v.size() != cols.size()) throw Error(ErrorKind::ConfigError, "bad trajectory row");
    traj.t.push_back(v.front());
    traj.states.push_back(unflatten<State>(std::vector<double>(v.begin() + 1, v.end())));
    traj.diagnostics.emplace_back();
  }
  return traj;
}

/// JSON Schema for the configuration file.
inline Json config_schema() {
  auto num = [] { return Json{{"type", "number"}}; };
  auto arr = [](int n) {
    return Json{{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", n}, {"maxItems", n}};
  };
  Json s;
  s["$schema"] = "http://json-schema.org/draft-07/schema#";
  s["title"] = "hdp run configuration";
  s["type"] = "object";
  s["additionalProperties"] = false;
  s["required"] = Json::array({"scenario"});
  Json& p = s["properties"];
  p["scenario"] = {{"enum", {"ball_hocs", "ball_dalembert", "free"}}};
  p["params"] = {{"type", "object"},
                 {"additionalProperties", false},
                 {"properties", {{"r1", num()}, {"r2", num()}, {"I1", num()}, {"I2", num()}, {"m2", num()}, {"g", num()}}}};
  p["lyapunov"] = {{"type", "object"},
                   {"additionalProperties", false},
                   {"properties",
                    {{"phi_diagonal", arr(9)},
                     {"potential", {{"enum", {"tilt", "none"}}}},
                     {"mu_rate_coefficient", num()}}}};
  p["gamma_inertia"] = arr(3);
  p["integrator"] = {{"type", "object"},
                     {"additionalProperties", false},
                     {"properties",
                      {{"dt", num()},
                       {"T", num()},
                       {"method", {{"enum", {"rk4", "euler"}}}},
                       {"project", {{"type", "boolean"}}},
                       {"drift_alarm", num()}}}};
  p["initial"] = {
      {"type", "object"},
      {"additionalProperties", false},
      {"properties",
       {{"seed", {{"type", "integer"}, {"minimum", 0}}},
        {"spread",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties", {{"pi", num()}, {"gamma", num()}, {"sigma", num()}, {"tilt", num()}}}}},
        {"state",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"R", arr(9)}, {"pi", arr(3)}, {"e", arr(3)}, {"sigma", arr(3)}, {"C", arr(9)}, {"gamma", arr(3)}}}}},
        {"project", {{"type", "boolean"}}}}}};
  p["mode"] = {{"enum", {"reduced", "full", "both", "verify"}}};
  p["output"] = {{"type", "object"},
                 {"additionalProperties", false},
                 {"properties", {{"directory", {{"type", "string"}}}, {"prefix", {{"type", "string"}}}}}};
  p["action_side"] = {{"enum", {"left", "right"}}};
  p["case"] = {{"enum", {"general", "trivial_connection", "flat_base"}}};
  p["connection"] = {{"enum", {"trivial", "gnc"}}};
  return s;
}

}  // namespace hdp
