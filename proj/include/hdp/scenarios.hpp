#pragma once

// Concrete systems on Q = SO(3) x S^2 x SO(3): a ball B2 rolling on a ball
// B1, either with a Lyapunov torque constraint (higher-order constrained
// system) or with plain d'Alembert rolling, and an unconstrained system.
// Each is packaged as a reduced problem plus the unreduced dynamics.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hdp/fullspace.hpp"
#include "hdp/integrate.hpp"
#include "hdp/reduction.hpp"

namespace hdp {

enum class ScenarioId { ball_hocs, ball_dalembert, free };

inline const char* to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::ball_hocs: return "ball_hocs";
    case ScenarioId::ball_dalembert: return "ball_dalembert";
    case ScenarioId::free: return "free";
  }
  return "unknown";
}

inline ScenarioId scenario_from_string(const std::string& s) {
  if (s == "ball_hocs") return ScenarioId::ball_hocs;
  if (s == "ball_dalembert") return ScenarioId::ball_dalembert;
  if (s == "free") return ScenarioId::free;
  throw Error(ErrorKind::ConfigError, "unknown scenario '" + s + "'");
}

struct Scenario {
  ScenarioId id = ScenarioId::ball_hocs;
  BallParams params;
  std::optional<LyapunovSpec> lyapunov;
  Vec3 gamma_inertia = Vec3::Constant(0.1);
  HdpProblem reduced;
  FullDynamics full;
};

/// H = π²/2I1 + σ²/2m2 + γ²/2I2 + m2 g e·z.
inline double ball_hamiltonian(const BallParams& p, const FullState& s) {
  return s.pi.squaredNorm() / (2.0 * p.I1) + s.sigma.squaredNorm() / (2.0 * p.m2) +
         s.gamma.squaredNorm() / (2.0 * p.I2) + p.m2 * p.g * s.e.dot(kUp);
}

namespace detail {

inline Vec3 inverse_inertia(const Vec3& inertia) { return inertia.cwiseInverse(); }

inline FullHamiltonian full_hamiltonian(const BallParams& p, const Vec3& inertia) {
  const Vec3 K = inverse_inertia(inertia);
  FullHamiltonian H;
  H.value = [p, K](const FullState& s) {
    return s.pi.squaredNorm() / (2.0 * p.I1) + s.sigma.squaredNorm() / (2.0 * p.m2) +
           0.5 * s.gamma.dot(K.cwiseProduct(s.gamma)) + p.m2 * p.g * s.e.dot(kUp);
  };
  H.fiber = [p, K](const FullState& s) {
    return TQVector{s.pi / p.I1, project_sphere_tangent(s.e, s.sigma) / p.m2, K.cwiseProduct(s.gamma)};
  };
  H.base = [p](const FullState& s) {
    return TQCovector{Vec3::Zero(), p.m2 * p.g * project_sphere_tangent(s.e, kUp), Vec3::Zero()};
  };
  return H;
}

inline ReducedHamiltonian reduced_hamiltonian(const BallParams& p, const Vec3& inertia) {
  const Vec3 K = inverse_inertia(inertia);
  ReducedHamiltonian h;
  h.value = [p, K](const ReducedState& s) {
    return s.pi.squaredNorm() / (2.0 * p.I1) + s.sigma.squaredNorm() / (2.0 * p.m2) +
           0.5 * s.mu.dot(K.cwiseProduct(s.mu)) + p.m2 * p.g * s.x.e.dot(kUp);
  };
  h.dh_dy = [p](const ReducedState& s) {
    return BaseTangent{s.pi / p.I1, project_sphere_tangent(s.x.e, s.sigma) / p.m2};
  };
  h.dh_dmu = [K](const ReducedState& s) { return Vec3(K.cwiseProduct(s.mu)); };
  h.dch_dx = [p](const ReducedState& s) {
    return BaseCovector{Vec3::Zero(), p.m2 * p.g * project_sphere_tangent(s.x.e, kUp)};
  };
  h.dh_dx_flat = h.dch_dx;
  return h;
}

inline KineticMetric kinetic_metric(const BallParams& p, const Vec3& inertia) {
  return [p, inertia](const ReducedState&) {
    Mat9 G = Mat9::Zero();
    G.diagonal() << Vec3::Constant(p.I1), Vec3::Constant(p.m2), inertia;
    return G;
  };
}

inline std::vector<TQVector> hocs_generators(const BallParams& p, const Vec3& e) {
  std::vector<TQVector> g;
  for (int i = 0; i < 3; ++i) {
    const Vec3 E = Vec3::Unit(i);
    g.push_back({Vec3::Zero(), p.r12() * E.cross(e), E});
  }
  return g;
}

inline std::vector<TQVector> rolling_generators(const BallParams& p, const Vec3& e) {
  std::vector<TQVector> g;
  for (int i = 0; i < 3; ++i) {
    const Vec3 E = Vec3::Unit(i);
    g.push_back({E, p.k() * p.r1 * E.cross(e), Vec3::Zero()});
    g.push_back({Vec3::Zero(), p.k() * p.r2 * E.cross(e), E});
  }
  return g;
}

inline std::vector<TQVector> free_generators(const Vec3& e) {
  const Eigen::Matrix<double, 9, 8> B = tq_basis(e);
  std::vector<TQVector> g;
  for (int j = 0; j < 8; ++j) g.push_back(TQVector::from(B.col(j)));
  return g;
}

inline FullState lift(const ReducedState& r) {
  FullState s;
  s.R = r.x.R;
  s.pi = r.pi;
  s.e = r.x.e;
  s.sigma = r.sigma;
  s.gamma = r.mu;
  return s;
}

/// Rows t_iᵀ ρ' = 0 of the rolling condition ρ = σ/m2 − k w×e, as
/// coefficients on (e', π', σ', γ').
struct RollingRows {
  Eigen::Matrix<double, 2, 3> e_dot, pi_dot, sigma_dot, gamma_dot;
};

inline RollingRows rolling_rows(const BallParams& p, const Vec3& pi, const Vec3& e, const Vec3& gamma) {
  const auto t = sphere_tangent_basis(e);
  Eigen::Matrix<double, 2, 3> T;
  T.row(0) = t[0].transpose();
  T.row(1) = t[1].transpose();
  const double k = p.k();
  const Vec3 w = rolling_omega(p, pi, gamma);
  RollingRows r;
  r.e_dot = -k * T * hat(w);
  r.pi_dot = (k * p.r1 / p.I1) * T * hat(e);
  r.sigma_dot = T / p.m2;
  r.gamma_dot = (k * p.r2 / p.I2) * T * hat(e);
  return r;
}

inline Vec3 rolling_sigma(const BallParams& p, const Vec3& pi, const Vec3& e, const Vec3& gamma) {
  return p.m2 * p.k() * rolling_omega(p, pi, gamma).cross(e);
}

}  // namespace detail

inline FullConstraint rolling_constraint_full(const BallParams& p) {
  FullConstraint c;
  c.name = "rolling";
  c.order = 1;
  c.residual = [p](const FullState& s) { return linalg::Vector(rolling_residual(s, p)); };
  c.rate_rows = [p](const FullState& s) {
    const auto r = detail::rolling_rows(p, s.pi, s.e, s.gamma);
    RateRows rows{linalg::Matrix::Zero(2, 18), linalg::Vector::Zero(2)};
    rows.A.block<2, 3>(0, 3) = r.e_dot;
    rows.A.block<2, 3>(0, 9) = r.pi_dot;
    rows.A.block<2, 3>(0, 12) = r.sigma_dot;
    rows.A.block<2, 3>(0, 15) = r.gamma_dot;
    return rows;
  };
  c.project = [p](const FullState& s) {
    FullState out = s;
    out.sigma = detail::rolling_sigma(p, s.pi, s.e, s.gamma);
    return out;
  };
  return c;
}

inline ReducedConstraint rolling_constraint_reduced(const BallParams& p) {
  ReducedConstraint c;
  c.name = "rolling";
  c.order = 1;
  c.residual = [p](const ReducedState& s) {
    return linalg::Vector(rolling_residual(s.pi, s.x.e, s.sigma, s.mu, p));
  };
  c.rate_rows = [p](const ReducedState& s) {
    const auto r = detail::rolling_rows(p, s.pi, s.x.e, s.mu);
    RateRows rows{linalg::Matrix::Zero(2, 15), linalg::Vector::Zero(2)};
    rows.A.block<2, 3>(0, 3) = r.e_dot;
    rows.A.block<2, 3>(0, 6) = r.pi_dot;
    rows.A.block<2, 3>(0, 9) = r.sigma_dot;
    rows.A.block<2, 3>(0, 12) = r.gamma_dot;
    return rows;
  };
  c.project = [p](const ReducedState& s) {
    ReducedState out = s;
    out.sigma = detail::rolling_sigma(p, s.pi, s.x.e, s.mu);
    return out;
  };
  return c;
}

inline FullConstraint lyapunov_constraint_full(const LyapunovSpec& l) {
  FullConstraint c;
  c.name = "lyapunov";
  c.order = 2;
  c.rate_rows = [l](const FullState& s) {
    RateRows rows{linalg::Matrix(1, 18), linalg::Vector(1)};
    rows.A.row(0) = lyapunov_differential(l, s).transpose();
    rows.b(0) = -l.mu_rate(s);
    return rows;
  };
  return c;
}

/// The reduced rate (x', π', σ', μ') maps onto the full rate with ξ removed.
inline ReducedConstraint lyapunov_constraint_reduced(const LyapunovSpec& l) {
  ReducedConstraint c;
  c.name = "lyapunov";
  c.order = 2;
  c.rate_rows = [l](const ReducedState& r) {
    const FullState s = detail::lift(r);
    const Vec18 d = lyapunov_differential(l, s);
    RateRows rows{linalg::Matrix(1, 15), linalg::Vector(1)};
    rows.A.block<1, 6>(0, 0) = d.head<6>().transpose();
    rows.A.block<1, 9>(0, 6) = d.tail<9>().transpose();
    rows.b(0) = -l.mu_rate(s);
    return rows;
  };
  return c;
}

/// Closed form of the generalized nonholonomic connection for the Lyapunov
/// system: 𝒜•(η, δe) = −(1/r12) e × δe.
inline ConnectionForm ball_hocs_gnc_closed_form(const BallParams& p) {
  const double r12 = p.r12();
  return ConnectionForm(
      [r12](const ReducedState& z) {
        Mat36 m = Mat36::Zero();
        m.rightCols<3>() = -hat(z.x.e) / r12;
        return m;
      },
      "hocs-closed-form");
}

/// Closed form for d'Alembert rolling: 𝒜•(η, δe) = −(1/r12) e × δe + (r1/r2) P(e) η.
inline ConnectionForm ball_dalembert_gnc_closed_form(const BallParams& p) {
  const double r12 = p.r12();
  const double ratio = p.r1 / p.r2;
  return ConnectionForm(
      [r12, ratio](const ReducedState& z) {
        const Vec3& e = z.x.e;
        Mat36 m;
        m.leftCols<3>() = ratio * (Mat3::Identity() - e * e.transpose());
        m.rightCols<3>() = -hat(e) / r12;
        return m;
      },
      "dalembert-closed-form");
}

namespace detail {

inline Scenario assemble(ScenarioId id, const BallParams& p, const Vec3& inertia,
                         std::function<std::vector<TQVector>(const Vec3&)> gens, std::string dist_name) {
  p.validate();
  Scenario sc;
  sc.id = id;
  sc.params = p;
  sc.gamma_inertia = inertia;
  sc.reduced.h = reduced_hamiltonian(p, inertia);
  sc.reduced.metric = kinetic_metric(p, inertia);
  sc.reduced.dist = {[gens](const ReducedState& z) { return gens(z.x.e); }, std::move(dist_name), false};
  sc.reduced.A = ConnectionForm::trivial();
  sc.reduced.A_gnc = gnc_connection(sc.reduced.dist, sc.reduced.metric);
  sc.reduced.side = ActionSide::right;
  sc.reduced.rcase = ReductionCase::trivial_connection;
  sc.full.name = to_string(id);
  sc.full.H = full_hamiltonian(p, inertia);
  sc.full.variations = [gens](const FullState& s) { return gens(s.e); };
  return sc;
}

}  // namespace detail

/// Rolling plus Lyapunov torque: C_V = {(0, r12 ξ×e, ξ)}.
inline Scenario ball_hocs(const BallParams& p, const LyapunovSpec& l) {
  Scenario sc = detail::assemble(
      ScenarioId::ball_hocs, p, Vec3::Constant(p.I2),
      [p](const Vec3& e) { return detail::hocs_generators(p, e); }, "rolling-lyapunov");
  sc.lyapunov = l;
  sc.reduced.constraints = {rolling_constraint_reduced(p), lyapunov_constraint_reduced(l)};
  sc.full.constraints = {rolling_constraint_full(p), lyapunov_constraint_full(l)};
  return sc;
}

inline Scenario ball_hocs(const BallParams& p) { return ball_hocs(p, default_lyapunov(p)); }

/// Pure rolling with C_V equal to the rolling distribution.
inline Scenario ball_gnhs_dalembert(const BallParams& p) {
  Scenario sc = detail::assemble(
      ScenarioId::ball_dalembert, p, Vec3::Constant(p.I2),
      [p](const Vec3& e) { return detail::rolling_generators(p, e); }, "rolling");
  sc.reduced.constraints = {rolling_constraint_reduced(p)};
  sc.full.constraints = {rolling_constraint_full(p)};
  return sc;
}

/// No constraints; B2's spin inertia may be anisotropic.
inline Scenario free_system(const BallParams& p, const Vec3& inertia) {
  if (!(inertia.minCoeff() > 0.0)) throw Error(ErrorKind::ConfigError, "inertia must be positive");
  return detail::assemble(
      ScenarioId::free, p, inertia, [](const Vec3& e) { return detail::free_generators(e); }, "free");
}

inline Scenario free_system(const BallParams& p) { return free_system(p, Vec3::Constant(p.I2)); }

inline Scenario make_scenario(ScenarioId id, const BallParams& p, const std::optional<LyapunovSpec>& l = {},
                              const std::optional<Vec3>& inertia = {}) {
  switch (id) {
    case ScenarioId::ball_hocs: return ball_hocs(p, l ? *l : default_lyapunov(p));
    case ScenarioId::ball_dalembert: return ball_gnhs_dalembert(p);
    case ScenarioId::free: return free_system(p, inertia ? *inertia : Vec3::Constant(p.I2));
  }
  throw Error(ErrorKind::ConfigError, "unknown scenario");
}

/// Same problem with the descriptive connection set to the variational one
/// (one-connection form, no φ term).
inline HdpProblem with_gnc_as_descriptive(const HdpProblem& p) { return rebase(p, p.A_gnc); }

/// A copy whose Hamiltonian picks up a C-dependent term; used as a negative
/// control for invariance_check.
inline Scenario with_broken_hamiltonian(Scenario sc, double eps = 1e-3) {
  const auto base = sc.full.H.value;
  sc.full.H.value = [base, eps](const FullState& s) { return base(s) + eps * s.C(0, 2); };
  sc.full.H.fiber = nullptr;
  sc.full.H.base = nullptr;
  return sc;
}

/// Max deviation of H, the kinematic constraints and C_V under C -> C B.
inline double invariance_check(const Scenario& sc, const Mat3& B, const FullState& s) {
  const FullState t = act(s, B);
  double dev = std::abs(sc.full.H.value(s) - sc.full.H.value(t));
  for (const auto& c : sc.full.constraints) {
    if (c.residual) dev = std::max(dev, (c.residual(s) - c.residual(t)).cwiseAbs().maxCoeff());
    const RateRows a = c.rate_rows(s), b = c.rate_rows(t);
    dev = std::max(dev, (a.A - b.A).cwiseAbs().maxCoeff());
    dev = std::max(dev, (a.b - b.b).cwiseAbs().maxCoeff());
  }
  const auto cols = [](const std::vector<TQVector>& g) {
    linalg::Matrix m(9, static_cast<int>(g.size()));
    for (std::size_t j = 0; j < g.size(); ++j) m.col(static_cast<int>(j)) = g[j].vec();
    return linalg::orthonormalize(m, 1e-8).columns;
  };
  const linalg::Matrix V1 = cols(sc.full.variations(s));
  const linalg::Matrix V2 = cols(sc.full.variations(t));
  if (V1.cols() != V2.cols()) return std::max(dev, 1.0);
  if (V1.cols() > 0) dev = std::max(dev, (V2 - V1 * (V1.transpose() * V2)).cwiseAbs().maxCoeff());
  return dev;
}

/// Seeded initial state; sigma is put on the rolling manifold for the ball
/// scenarios and made tangent otherwise.
struct InitialSpread {
  double pi = 0.5;
  double gamma = 0.05;
  double sigma = 0.3;
  double tilt = 0.5;
};

/// Default spreads per scenario. The Lyapunov constraint with the default V
/// needs B1 spinning fast enough to stay regular for a unit-time run.
inline InitialSpread default_spread(ScenarioId id) {
  InitialSpread s;
  if (id == ScenarioId::ball_hocs) {
    s.pi = 4.0;
    s.tilt = 0.05;
  }
  return s;
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return exp_so3(Vec3(n(rng), n(rng), n(rng)));
}

inline FullState random_state(const Scenario& sc, std::uint64_t seed, const InitialSpread& spread = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto vec = [&](double scale) { return Vec3(scale * n(rng), scale * n(rng), scale * n(rng)); };
  FullState s;
  s.R = random_rotation(rng);
  s.C = random_rotation(rng);
  s.e = (kUp + vec(spread.tilt)).normalized();
  s.pi = vec(spread.pi);
  s.gamma = vec(spread.gamma);
  s.sigma = project_sphere_tangent(s.e, vec(spread.sigma));
  for (const auto& c : sc.full.constraints) {
    if (c.project) s = c.project(s);
  }
  return s;
}

inline ReducedState reduce(const Scenario& sc, const FullState& s) { return atiyah_cotangent(s, sc.reduced.A); }

inline double full_constraint_drift(const Scenario& sc, const FullState& s) {
  double d = manifold_error(s);
  for (const auto& c : sc.full.constraints) {
    if (c.order == 1) d = std::max(d, c.residual(s).cwiseAbs().maxCoeff());
  }
  return d;
}

inline double reduced_constraint_drift(const Scenario& sc, const ReducedState& s) {
  double d = manifold_error(s);
  for (const auto& c : sc.reduced.constraints) {
    if (c.order == 1) d = std::max(d, c.residual(s).cwiseAbs().maxCoeff());
  }
  return d;
}

inline System<FullState, FullRate> full_system(const Scenario& sc) {
  System<FullState, FullRate> sys;
  sys.field = [&sc](const FullState& s) { return full_vector_field_detailed(sc.full, s).rate; };
  sys.project = [&sc](const FullState& s) {
    FullState out = project_manifold(s);
    for (const auto& c : sc.full.constraints) {
      if (c.project) out = c.project(out);
    }
    return out;
  };
  sys.drift = [&sc](const FullState& s) { return full_constraint_drift(sc, s); };
  sys.diagnose = [&sc](const FullState& s) {
    StepDiagnostics d;
    d.energy = sc.full.H.value(s);
    d.solve_residual = full_vector_field_detailed(sc.full, s).solve_residual;
    return d;
  };
  return sys;
}

inline System<ReducedState, ReducedRate> reduced_system(const Scenario& sc) {
  System<ReducedState, ReducedRate> sys;
  sys.field = [&sc](const ReducedState& s) { return solve_reduced_step(sc.reduced, s); };
  sys.project = [&sc](const ReducedState& s) {
    ReducedState out = project_manifold(s);
    for (const auto& c : sc.reduced.constraints) {
      if (c.project) out = c.project(out);
    }
    return out;
  };
  sys.drift = [&sc](const ReducedState& s) { return reduced_constraint_drift(sc, s); };
  sys.diagnose = [&sc](const ReducedState& s) {
    StepDiagnostics d;
    d.energy = sc.reduced.h.value(s);
    d.solve_residual = solve_reduced_step_detailed(sc.reduced, s).solve_residual;
    return d;
  };
  return sys;
}

}  // namespace hdp
