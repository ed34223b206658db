#pragma once

// Explicit RK4/Euler stepping (Munthe-Kaas on the rotation factors, plain on
// the embedded vector parts) with post-step projection, and reconstruction of the group variable along a reduced
// trajectory.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hdp/reduction.hpp"

namespace hdp {

enum class Method { rk4, euler };

inline const char* to_string(Method m) { return m == Method::rk4 ? "rk4" : "euler"; }

struct IntegratorConfig {
  double dt = 1e-3;
  double T = 1.0;
  Method method = Method::rk4;
  bool project = true;
  double drift_alarm = 1e-6;

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorKind::ConfigError, "dt must be positive");
    if (!(T >= dt)) throw Error(ErrorKind::ConfigError, "T must be at least dt");
    if (!(drift_alarm > 0.0)) throw Error(ErrorKind::ConfigError, "drift alarm must be positive");
  }

  int steps() const { return static_cast<int>(std::llround(T / dt)); }
};

struct StepDiagnostics {
  double solve_residual = 0.0;
  double energy = 0.0;
  double drift = 0.0;       // manifold + constraint error before projection
  double constraint = 0.0;  // after projection
};

template <class State>
struct Trajectory {
  std::vector<double> t;
  std::vector<State> states;
  std::vector<StepDiagnostics> diagnostics;
  bool ok = true;
  ErrorKind error = ErrorKind::StepFailure;
  std::string message;

  std::size_t size() const { return states.size(); }
};

/// A vector field plus the maps the stepper needs around it.
template <class State, class Rate>
struct System {
  std::function<Rate(const State&)> field;
  std::function<State(const State&)> project;
  std::function<double(const State&)> drift;
  std::function<StepDiagnostics(const State&)> diagnose;
};

namespace detail {

template <class Rate>
Rate combine(const Rate& a, const Rate& b, const Rate& c, const Rate& d) {
  return Rate::from((a.vec() + 2.0 * b.vec() + 2.0 * c.vec() + d.vec()) / 6.0);
}

}  // namespace detail

template <class State, class Rate>
State step(const System<State, Rate>& sys, const State& s, double h, Method method) {
  const Rate k1 = sys.field(s);
  if (method == Method::euler) return advance(s, k1, h);
  const Rate k2 = stage_correct(sys.field(advance(s, k1, 0.5 * h)), k1, 0.5 * h);
  const Rate k3 = stage_correct(sys.field(advance(s, k2, 0.5 * h)), k2, 0.5 * h);
  const Rate k4 = stage_correct(sys.field(advance(s, k3, h)), k3, h);
  return advance(s, detail::combine(k1, k2, k3, k4), h);
}

/// Runs until T or the first failure; on failure the trajectory keeps every
/// accepted step and records the error.
template <class State, class Rate>
Trajectory<State> integrate(const System<State, Rate>& sys, const State& s0, const IntegratorConfig& cfg) {
  cfg.validate();
  Trajectory<State> out;
  auto record = [&](double t, const State& s, double drift) {
    StepDiagnostics d = sys.diagnose ? sys.diagnose(s) : StepDiagnostics{};
    d.drift = drift;
    if (sys.drift) d.constraint = sys.drift(s);
    out.t.push_back(t);
    out.states.push_back(s);
    out.diagnostics.push_back(d);
  };
  try {
    if (sys.drift && sys.drift(s0) > cfg.drift_alarm) {
      throw Error(ErrorKind::DriftAlarm, "initial state violates its constraints");
    }
    record(0.0, s0, 0.0);
    State s = s0;
    const int n = cfg.steps();
    for (int i = 1; i <= n; ++i) {
      State next = step(sys, s, cfg.dt, cfg.method);
      const double drift = sys.drift ? sys.drift(next) : 0.0;
      if (!std::isfinite(drift) || drift > cfg.drift_alarm) {
        throw Error(ErrorKind::DriftAlarm, "drift " + std::to_string(drift) + " at step " + std::to_string(i));
      }
      if (cfg.project && sys.project) next = sys.project(next);
      s = next;
      record(i * cfg.dt, s, drift);
    }
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.kind();
    out.message = e.what();
  }
  return out;
}

/// Group velocity ξ = ∂h/∂μ − 𝒜(x) ∂h/∂y along the reduced curve.
inline Vec3 group_velocity(const ReducedHamiltonian& h, const ConnectionForm& conn, const ReducedState& s) {
  const Vec3 w = h.fiber_mu(s);
  if (conn.is_trivial()) return w;
  return w - conn(s, h.fiber_y(s));
}

/// C_{n+1} = exp(dt ½(ξ_n + ξ_{n+1})) C_n.
inline std::vector<Mat3> reconstruct_group(const Trajectory<ReducedState>& traj, const Mat3& C0,
                                           const ConnectionForm& conn, const ReducedHamiltonian& h) {
  std::vector<Mat3> out;
  if (traj.states.empty()) return out;
  out.reserve(traj.size());
  out.push_back(C0);
  Vec3 xi_prev = group_velocity(h, conn, traj.states.front());
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Vec3 xi = group_velocity(h, conn, traj.states[i]);
    const double dt = traj.t[i] - traj.t[i - 1];
    Mat3 C = exp_so3(0.5 * dt * (xi_prev + xi)) * out.back();
    if (orthonormality_error(C) > 1e-12) {
      const Mat3 fixed = orthonormalize(C);
      if ((fixed - C).cwiseAbs().maxCoeff() > 1e-6) {
        throw Error(ErrorKind::DriftAlarm, "group reconstruction left SO(3) at step " + std::to_string(i));
      }
      C = fixed;
    }
    out.push_back(C);
    xi_prev = xi;
  }
  return out;
}

}  // namespace hdp
