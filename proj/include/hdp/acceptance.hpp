#pragma once

// The acceptance suite as library functions, shared by the test binaries and
// the `verify` command. Each check returns its measured value next to the
// pinned tolerance.

#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hdp/scenarios.hpp"

namespace hdp::acceptance {

struct Result {
  int id = 0;
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

inline std::string format(const Result& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "AC%-2d %s  %-34s value=%.3e tol=%.1e", r.id, r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.value, r.tolerance);
  std::string s = buf;
  if (!r.detail.empty()) s += "  (" + r.detail + ")";
  return s;
}

inline Result make(int id, std::string name, double value, double tol, bool lower_is_better = true,
                   std::string detail = {}) {
  Result r{id, std::move(name), false, value, tol, std::move(detail)};
  r.passed = std::isfinite(value) && (lower_is_better ? value <= tol : value > tol);
  return r;
}

inline Vec3 gaussian3(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

inline BaseTangent random_tangent(std::mt19937_64& rng, const Vec3& e) {
  return {gaussian3(rng), project_sphere_tangent(e, gaussian3(rng))};
}

inline double max_abs(const Eigen::Ref<const linalg::Matrix>& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// AC1: hat/vee round trip, hat(v)w = v×w, hat(Ad_g v) = g hat(v) gᵀ, ⟨μ×ξ, w⟩ = ⟨μ, ξ×w⟩.
inline Result algebra_identities(int samples = 1000) {
  std::mt19937_64 rng(101);
  double err = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Vec3 v = gaussian3(rng), w = gaussian3(rng), mu = gaussian3(rng);
    const Mat3 g = random_rotation(rng);
    err = std::max(err, (vee(hat(v)) - v).cwiseAbs().maxCoeff());
    err = std::max(err, (hat(v) * w - v.cross(w)).cwiseAbs().maxCoeff());
    err = std::max(err, (hat(adjoint(g, v)) - g * hat(v) * g.transpose()).cwiseAbs().maxCoeff());
    err = std::max(err, std::abs(ad_star(v, mu).dot(w) - mu.dot(ad(v, w))));
  }
  return make(1, "algebra identities", err, 1e-12);
}

/// AC2: curvature of the trivial connection through the finite-difference
/// path, φ = 0 for A = A•, and the closed forms of A•, φ and the cotangent
/// Atiyah map of A•.
inline Result connection_suite(int samples = 100) {
  const BallParams p;
  const Scenario hocs = ball_hocs(p);
  const Scenario roll = ball_gnhs_dalembert(p);
  const ConnectionForm zero([](const ReducedState&) { return Mat36::Zero().eval(); }, "zero");
  const ConnectionForm hocs_closed = ball_hocs_gnc_closed_form(p);
  const ConnectionForm roll_closed = ball_dalembert_gnc_closed_form(p);
  std::mt19937_64 rng(202);
  double curv = 0.0, phi_same = 0.0, closed = 0.0;
  for (int i = 0; i < samples; ++i) {
    const FullState s = random_state(hocs, 1000 + static_cast<std::uint64_t>(i));
    const ReducedState z = drop_group(s);
    const BaseTangent u = random_tangent(rng, s.e), v = random_tangent(rng, s.e), dx = random_tangent(rng, s.e);
    curv = std::max(curv, reduced_curvature(zero, z.x, u, v).cwiseAbs().maxCoeff());
    phi_same = std::max(phi_same, phi_map(hocs.reduced.A_gnc, hocs.reduced.A_gnc, z, dx).cwiseAbs().maxCoeff());
    closed = std::max(closed, max_abs(hocs.reduced.A_gnc.matrix(z) - hocs_closed.matrix(z)));
    closed = std::max(closed, max_abs(roll.reduced.A_gnc.matrix(z) - roll_closed.matrix(z)));
    const Vec3 phi = phi_map(hocs.reduced.A, hocs.reduced.A_gnc, z, dx);
    closed = std::max(closed, (phi - s.e.cross(dx.de) / p.r12()).cwiseAbs().maxCoeff());
    const ReducedState a = atiyah_cotangent(s, hocs.reduced.A_gnc);
    closed = std::max(closed, (a.sigma - (s.sigma + s.gamma.cross(s.e) / p.r12())).cwiseAbs().maxCoeff());
    closed = std::max(closed, (a.pi - s.pi).cwiseAbs().maxCoeff());
  }
  const double worst = std::max({curv, phi_same, closed});
  char d[160];
  std::snprintf(d, sizeof d, "trivial-curvature %.1e, phi(A=A•) %.1e, closed forms %.1e", curv, phi_same, closed);
  Result r = make(2, "connection suite", worst, 1e-12, true, d);
  r.passed = curv <= 1e-12 && phi_same <= 1e-14 && closed <= 1e-12;
  return r;
}

/// AC3: assembled Lyapunov-system residuals against the closed-form
/// horizontal and vertical equations, term by term.
inline Result equation_specialization(int samples = 100) {
  const BallParams p;
  const Scenario sc = ball_hocs(p);
  std::mt19937_64 rng(303);
  double err = 0.0;
  for (int i = 0; i < samples; ++i) {
    const FullState s = random_state(sc, 2000 + static_cast<std::uint64_t>(i));
    const ReducedState z = reduce(sc, s);
    ReducedRate r;
    r.eta = gaussian3(rng);
    r.e_dot = gaussian3(rng);
    r.pi_dot = gaussian3(rng);
    r.sigma_dot = gaussian3(rng);
    r.mu_dot = gaussian3(rng);
    const HdpContext c = make_context(sc.reduced, z);
    const auto hor = horizontal_residuals(c, r);
    const auto ver = vertical_residuals(c, r);
    if (hor.size() != 2 || ver.size() != 1) return make(3, "equation specialization", 1.0, 1e-12);
    const Vec3& e = z.x.e;
    const Vec3 display = project_sphere_tangent(e, r.sigma_dot) + p.m2 * p.g * project_sphere_tangent(e, kUp) +
                         r.mu_dot.cross(e) / p.r12();
    for (int j = 0; j < 2; ++j) {
      const Vec6 dx = c.vars.hor.col(j);
      err = std::max(err, dx.head<3>().cwiseAbs().maxCoeff());
      err = std::max(err, std::abs(hor[static_cast<std::size_t>(j)] - display.dot(dx.tail<3>())));
    }
    const Vec3 w = c.vars.ver.col(0);
    err = std::max(err, std::min((w - e).cwiseAbs().maxCoeff(), (w + e).cwiseAbs().maxCoeff()));
    err = std::max(err, std::abs(ver[0] - r.mu_dot.dot(w)));
  }
  return make(3, "equation specialization", err, 1e-12);
}

struct OraclePair {
  Trajectory<FullState> full;
  Trajectory<ReducedState> reduced;
  double deviation = 0.0;
};

inline IntegratorConfig acceptance_integrator() {
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.T = 1.0;
  cfg.method = Method::rk4;
  return cfg;
}

inline FullState reference_state(const Scenario& sc) { return random_state(sc, 1, default_spread(sc.id)); }

inline OraclePair oracle_pair(const Scenario& sc, const IntegratorConfig& cfg = acceptance_integrator()) {
  OraclePair o;
  auto fs = full_system(sc);
  auto rs = reduced_system(sc);
  fs.diagnose = nullptr;
  rs.diagnose = nullptr;
  const FullState s0 = reference_state(sc);
  o.full = integrate(fs, s0, cfg);
  o.reduced = integrate(rs, reduce(sc, s0), cfg);
  const std::size_t n = std::min(o.full.size(), o.reduced.size());
  for (std::size_t i = 0; i < n; ++i) {
    o.deviation = std::max(o.deviation, state_distance(reduce(sc, o.full.states[i]), o.reduced.states[i]));
  }
  if (!o.full.ok || !o.reduced.ok) o.deviation = std::numeric_limits<double>::infinity();
  return o;
}

/// AC4: projected full trajectory against the reduced one.
inline Result oracle_equivalence(const std::vector<ScenarioId>& ids = {ScenarioId::ball_hocs,
                                                                      ScenarioId::ball_dalembert}) {
  const BallParams p;
  double worst = 0.0;
  std::string detail;
  for (ScenarioId id : ids) {
    const Scenario sc = make_scenario(id, p);
    const OraclePair o = oracle_pair(sc);
    worst = std::max(worst, o.deviation);
    char d[96];
    std::snprintf(d, sizeof d, "%s%s %.1e", detail.empty() ? "" : ", ", to_string(id), o.deviation);
    detail += d;
  }
  return make(4, "oracle equivalence", worst, 1e-6, true, detail);
}

/// AC5: group reconstruction along the reduced Lyapunov-system run.
inline Result reconstruction_roundtrip() {
  const Scenario sc = ball_hocs(BallParams{});
  auto rs = reduced_system(sc);
  rs.diagnose = nullptr;
  const FullState s0 = reference_state(sc);
  const auto traj = integrate(rs, reduce(sc, s0), acceptance_integrator());
  if (!traj.ok) return make(5, "reconstruction round-trip", 1.0, 1e-6, true, traj.message);
  const auto Cs = reconstruct_group(traj, s0.C, sc.reduced.A, sc.reduced.h);
  double ortho = 0.0, round = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    ortho = std::max(ortho, orthonormality_error(Cs[i]));
    const FullState lifted = atiyah_cotangent_inverse(traj.states[i], sc.reduced.A, Cs[i]);
    round = std::max(round, state_distance(atiyah_cotangent(lifted, sc.reduced.A), traj.states[i]));
  }
  char d[96];
  std::snprintf(d, sizeof d, "orthonormality %.1e (tol 1e-9), re-projection %.1e", ortho, round);
  Result r = make(5, "reconstruction round-trip", round, 1e-6, true, d);
  r.passed = r.passed && ortho <= 1e-9;
  return r;
}

/// AC6: rolling and Lyapunov residuals along the full Lyapunov-system run,
/// and the vertical equation along the reduced run.
inline Result constraint_maintenance() {
  const Scenario sc = ball_hocs(BallParams{});
  const OraclePair o = oracle_pair(sc);
  if (!o.full.ok || !o.reduced.ok) {
    return make(6, "constraint maintenance", 1.0, 1e-8, true, o.full.message + o.reduced.message);
  }
  double roll = 0.0, lyap = 0.0, vert = 0.0;
  for (std::size_t i = 0; i < o.full.size(); ++i) {
    const FullState& s = o.full.states[i];
    roll = std::max({roll, rolling_residual(s, sc.params).cwiseAbs().maxCoeff(), o.full.diagnostics[i].drift});
    lyap = std::max(lyap, std::abs(lyapunov_residual(*sc.lyapunov, s, full_vector_field(sc.full, s).first)));
  }
  for (const ReducedState& z : o.reduced.states) {
    vert = std::max(vert, std::abs(solve_reduced_step(sc.reduced, z).mu_dot.dot(z.x.e)));
  }
  char d[128];
  std::snprintf(d, sizeof d, "rolling %.1e, lyapunov %.1e, |mu'.e| %.1e (tol 1e-12)", roll, lyap, vert);
  Result r = make(6, "constraint maintenance", std::max(roll, lyap), 1e-8, true, d);
  r.passed = r.passed && vert <= 1e-12;
  return r;
}

/// AC7: energy drift of the d'Alembert rolling system.
inline Result energy_conservation() {
  const Scenario sc = ball_gnhs_dalembert(BallParams{});
  auto fs = full_system(sc);
  fs.diagnose = nullptr;
  const auto traj = integrate(fs, reference_state(sc), acceptance_integrator());
  if (!traj.ok) return make(7, "energy conservation", 1.0, 1e-8, true, traj.message);
  const double H0 = sc.full.H.value(traj.states.front());
  double drift = 0.0;
  for (const auto& s : traj.states) drift = std::max(drift, std::abs(sc.full.H.value(s) - H0));
  return make(7, "energy conservation", drift, 1e-8);
}

inline double relative_error(const Eigen::Ref<const linalg::Vector>& a, const Eigen::Ref<const linalg::Vector>& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
}

/// AC8: analytic fiber and base derivatives of h and H against central
/// differences (error relative to max(1, |analytic|)).
inline Result derivative_crosscheck(int samples = 100) {
  const BallParams p;
  std::vector<Scenario> scs{ball_hocs(p), free_system(p, Vec3(0.1, 0.2, 0.3))};
  double err = 0.0;
  for (const Scenario& sc : scs) {
    for (int i = 0; i < samples; ++i) {
      InitialSpread spread;
      spread.sigma = 1.0;
      const FullState s = random_state(sc, 3000 + static_cast<std::uint64_t>(i), spread);
      const ReducedState z = reduce(sc, s);
      const ReducedHamiltonian& h = sc.reduced.h;
      err = std::max(err, relative_error(h.dh_dy(z).vec(), h.fd_fiber_y(z).vec()));
      err = std::max(err, relative_error(h.dh_dmu(z), h.fd_fiber_mu(z)));
      err = std::max(err, relative_error(h.dch_dx(z).vec(), h.fd_base(z).vec()));
      err = std::max(err, relative_error(h.dh_dx_flat(z).vec(), h.fd_base_flat(z).vec()));
      const FullHamiltonian& H = sc.full.H;
      err = std::max(err, relative_error(H.fiber(s).vec(), H.fd_fiber(s).vec()));
      err = std::max(err, relative_error(H.base(s).vec(), H.fd_base(s).vec()));
    }
  }
  return make(8, "derivative cross-checks", err, 1e-5);
}

/// AC9: invariance under C -> C B for both ball systems, and detection of a
/// Hamiltonian that breaks the symmetry.
inline Result symmetry_suite(int samples = 50) {
  const BallParams p;
  std::mt19937_64 rng(909);
  double worst = 0.0;
  for (const Scenario& sc : {ball_hocs(p), ball_gnhs_dalembert(p)}) {
    for (int i = 0; i < samples; ++i) {
      const FullState s = random_state(sc, 4000 + static_cast<std::uint64_t>(i));
      worst = std::max(worst, invariance_check(sc, random_rotation(rng), s));
    }
  }
  const Scenario broken = with_broken_hamiltonian(ball_hocs(p));
  double control = 0.0;
  for (int i = 0; i < samples; ++i) {
    control = std::max(control, invariance_check(broken, random_rotation(rng), random_state(broken, 5000 + i)));
  }
  char d[96];
  std::snprintf(d, sizeof d, "broken-H control deviation %.1e (must exceed 1e-6)", control);
  Result r = make(9, "symmetry suite", worst, 1e-10, true, d);
  r.passed = r.passed && control > 1e-6;
  return r;
}

/// AC10: unknown and equation counts of the two Lyapunov-system solves.
inline Result reduction_count() {
  const Scenario sc = ball_hocs(BallParams{});
  const FullState s = reference_state(sc);
  const ReducedStep red = solve_reduced_step_detailed(sc.reduced, reduce(sc, s));
  const FullStep full = full_vector_field_detailed(sc.full, s);
  const int dim_q = 8, dim_g = 3, dim_x = 5;
  std::vector<TQVector> gens = sc.full.variations(s);
  linalg::Matrix G(9, static_cast<int>(gens.size()));
  for (std::size_t j = 0; j < gens.size(); ++j) G.col(static_cast<int>(j)) = gens[j].vec();
  const int dim_cv = linalg::rank(G);
  const int reduced_equations = dim_x + red.horizontal_dim + red.vertical_dim;
  const int full_equations = dim_q + dim_cv;
  const int diff = full.unknowns - red.unknowns;
  char d[192];
  std::snprintf(d, sizeof d, "unknowns full %d reduced %d; equations full %d reduced %d = dimQ+dimCV-dimG = %d",
                full.unknowns, red.unknowns, full_equations, reduced_equations, dim_q + dim_cv - dim_g);
  Result r = make(10, "reduction count", std::abs(diff - dim_g), 0.0, true, d);
  r.passed = diff == dim_g && reduced_equations == dim_q + dim_cv - dim_g && full_equations - reduced_equations == dim_g;
  return r;
}

/// Runs the whole suite, or the criteria that involve one scenario.
inline std::vector<Result> run_all(std::optional<ScenarioId> only = {}) {
  std::vector<Result> out;
  const bool hocs = !only || *only == ScenarioId::ball_hocs;
  const bool roll = !only || *only == ScenarioId::ball_dalembert;
  if (!only) {
    out.push_back(algebra_identities());
    out.push_back(connection_suite());
  }
  if (hocs) out.push_back(equation_specialization());
  if (only) {
    out.push_back(oracle_equivalence({*only}));
  } else {
    out.push_back(oracle_equivalence());
  }
  if (hocs) {
    out.push_back(reconstruction_roundtrip());
    out.push_back(constraint_maintenance());
  }
  if (roll) out.push_back(energy_conservation());
  if (!only) out.push_back(derivative_crosscheck());
  if (hocs || roll) out.push_back(symmetry_suite());
  if (hocs) out.push_back(reduction_count());
  return out;
}

}  // namespace hdp::acceptance
