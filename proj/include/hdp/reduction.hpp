#pragma once

// Reduced Hamilton–d'Alembert–Poincaré equations on T*X × g*: residual
// assembly for the horizontal, vertical and base equations, and an explicit
// vector field obtained by solving them together with the differentiated
// kinematic constraints.

#include <functional>
#include <string>
#include <vector>

#include "hdp/connection.hpp"
#include "hdp/constraints.hpp"
#include "hdp/derivatives.hpp"

namespace hdp {

enum class ActionSide { left, right };
enum class ReductionCase { general, trivial_connection, flat_base };

inline double action_sign(ActionSide side) { return side == ActionSide::left ? 1.0 : -1.0; }

inline const char* to_string(ActionSide s) { return s == ActionSide::left ? "left" : "right"; }

inline const char* to_string(ReductionCase c) {
  switch (c) {
    case ReductionCase::general: return "general";
    case ReductionCase::trivial_connection: return "trivial_connection";
    case ReductionCase::flat_base: return "flat_base";
  }
  return "unknown";
}

/// h on T*X × g* with optional analytic derivatives; missing ones fall back
/// to central differences.
struct ReducedHamiltonian {
  std::function<double(const ReducedState&)> value;
  std::function<BaseTangent(const ReducedState&)> dh_dy;
  std::function<Vec3(const ReducedState&)> dh_dmu;
  // Covariant base derivative with mu fixed: right-trivialized on SO(3),
  // sigma parallel transported on S^2.
  std::function<BaseCovector(const ReducedState&)> dch_dx;
  // Plain partial in the embedding, sigma held fixed.
  std::function<BaseCovector(const ReducedState&)> dh_dx_flat;

  BaseTangent fd_fiber_y(const ReducedState& s) const {
    BaseTangent d;
    d.eta = fd::gradient3([&](const Vec3& p) { ReducedState t = s; t.pi = p; return value(t); }, s.pi);
    d.de = fd::tangent_gradient([&](const Vec3& q) { ReducedState t = s; t.sigma = q; return value(t); },
                                s.x.e, s.sigma);
    return d;
  }

  Vec3 fd_fiber_mu(const ReducedState& s) const {
    return fd::gradient3([&](const Vec3& m) { ReducedState t = s; t.mu = m; return value(t); }, s.mu);
  }

  BaseCovector fd_base(const ReducedState& s) const {
    BaseCovector d;
    d.eta = fd::rotation_gradient([&](const Mat3& R) { ReducedState t = s; t.x.R = R; return value(t); }, s.x.R);
    d.de = fd::sphere_base_gradient(
        [&](const Vec3& e, const Vec3& sig) {
          ReducedState t = s;
          t.x.e = e;
          t.sigma = sig;
          return value(t);
        },
        s.x.e, s.sigma);
    return d;
  }

  BaseCovector fd_base_flat(const ReducedState& s) const {
    BaseCovector d;
    d.eta = fd::rotation_gradient([&](const Mat3& R) { ReducedState t = s; t.x.R = R; return value(t); }, s.x.R);
    d.de = fd::sphere_flat_gradient(
        [&](const Vec3& e, const Vec3& sig) {
          ReducedState t = s;
          t.x.e = e;
          t.sigma = sig;
          return value(t);
        },
        s.x.e, s.sigma);
    return d;
  }

  BaseTangent fiber_y(const ReducedState& s) const { return dh_dy ? dh_dy(s) : fd_fiber_y(s); }
  Vec3 fiber_mu(const ReducedState& s) const { return dh_dmu ? dh_dmu(s) : fd_fiber_mu(s); }
  BaseCovector base(const ReducedState& s) const { return dch_dx ? dch_dx(s) : fd_base(s); }
  BaseCovector base_flat(const ReducedState& s) const { return dh_dx_flat ? dh_dx_flat(s) : fd_base_flat(s); }
};

using ReducedConstraint = KinematicConstraint<ReducedState>;

struct HdpProblem {
  ReducedHamiltonian h;
  ConnectionForm A = ConnectionForm::trivial();
  ConnectionForm A_gnc;
  VariationalDistribution dist;
  KineticMetric metric;
  std::vector<ReducedConstraint> constraints;
  ActionSide side = ActionSide::right;
  ReductionCase rcase = ReductionCase::trivial_connection;

  void validate() const {
    if (rcase != ReductionCase::general && !A.is_trivial()) {
      throw Error(ErrorKind::ConfigError, std::string("case ") + to_string(rcase) +
                                              " requires the trivial descriptive connection");
    }
    if (!h.value) throw Error(ErrorKind::ConfigError, "reduced Hamiltonian has no value function");
    if (!dist.generators || !metric) throw Error(ErrorKind::ConfigError, "variational data missing");
  }
};

struct HdpResiduals {
  std::vector<double> horizontal;
  std::vector<double> vertical;
  std::vector<double> kinematic;
  BaseTangent base;

  double max_abs() const {
    double m = base.vec().cwiseAbs().maxCoeff();
    for (const auto* v : {&horizontal, &vertical, &kinematic}) {
      for (double r : *v) m = std::max(m, std::abs(r));
    }
    return m;
  }
};

/// Dμ/Dt = μ' + s·ad*_{𝒜(x)x'} μ with s = +1 for a left action.
inline Vec3 covariant_dmu(const Vec3& mu, const Vec3& mu_dot, const ConnectionForm& conn, const BasePoint& x,
                          const BaseTangent& x_dot, ActionSide side = ActionSide::left) {
  if (conn.is_trivial()) return mu_dot;
  return mu_dot + action_sign(side) * ad_star(conn(x, x_dot), mu);
}

/// Dy/Dt: the pi slot passes through, the sigma slot is projected onto T_e S^2.
inline BaseCovector covariant_dy(const Vec3& pi_dot, const Vec3& sigma_dot, const BasePoint& x) {
  return {pi_dot, project_sphere_tangent(x.e, sigma_dot)};
}

/// ⟨∂h/∂x, δx⟩ = ⟨∂ᶜh/∂x, δx⟩ + s·⟨∂h/∂μ, ad*_{𝒜δx} μ⟩.
inline double base_derivative_correction(const ReducedHamiltonian& h, const ReducedState& s,
                                         const ConnectionForm& conn, const BaseTangent& dx,
                                         ActionSide side = ActionSide::left) {
  double out = pair(h.base(s), dx);
  if (!conn.is_trivial()) out += action_sign(side) * h.fiber_mu(s).dot(ad_star(conn(s, dx), s.mu));
  return out;
}

/// Everything in the residuals that depends on the state only. Residuals
/// are affine in the rate once this is built.
struct HdpContext {
  const HdpProblem* problem = nullptr;
  ReducedState state;
  ReducedVariations vars;
  BaseTangent dh_dy;
  Vec3 dh_dmu = Vec3::Zero();
  BaseCovector dh_dx;
  Mat36 A = Mat36::Zero();
  Mat36 A_gnc = Mat36::Zero();
  std::vector<Vec3> curvature;  // B̃(∂h/∂y, δx_j), general case only
  double s = -1.0;

  bool general() const { return problem->rcase == ReductionCase::general; }
};

inline ReducedVariations problem_variations(const HdpProblem& p, const ReducedState& zeta) {
  return decompose_reduced_variations(build_gnc(p.dist, p.metric, zeta).first);
}

/// Variations of the unconstrained problem: all of T X and all of g.
inline ReducedVariations free_variations(const BasePoint& x) {
  ReducedVariations v;
  v.hor = base_tangent_basis(x);
  v.ver = Mat3::Identity();
  return v;
}

inline HdpContext make_context(const HdpProblem& p, const ReducedState& zeta, ReducedVariations vars) {
  HdpContext c;
  c.problem = &p;
  c.state = zeta;
  c.vars = std::move(vars);
  c.dh_dy = p.h.fiber_y(zeta);
  c.dh_dmu = p.h.fiber_mu(zeta);
  c.dh_dx = p.rcase == ReductionCase::flat_base ? p.h.base_flat(zeta) : p.h.base(zeta);
  c.s = action_sign(p.side);
  if (!p.A.is_trivial()) c.A = p.A.matrix(zeta);
  if (!p.A_gnc.is_trivial()) c.A_gnc = p.A_gnc.matrix(zeta);
  if (c.general() && !p.A.is_trivial()) {
    for (int j = 0; j < c.vars.hor.cols(); ++j) {
      c.curvature.push_back(
          reduced_curvature(p.A, zeta.x, c.dh_dy, BaseTangent::from(c.vars.hor.col(j))));
    }
  }
  return c;
}

inline HdpContext make_context(const HdpProblem& p, const ReducedState& zeta) {
  return make_context(p, zeta, problem_variations(p, zeta));
}

namespace detail {

/// Dμ/Dt − s·ad*_{∂h/∂μ} μ, with the connection transport only in the general case.
inline Vec3 lie_poisson(const HdpContext& c, const ReducedRate& r) {
  Vec3 d = r.mu_dot;
  if (c.general()) d += c.s * ad_star(Vec3(c.A * r.x_dot().vec()), c.state.mu);
  return d - c.s * ad_star(c.dh_dmu, c.state.mu);
}

inline std::vector<double> horizontal(const HdpContext& c, const ReducedRate& r, const ReducedVariations& vars,
                                      const std::vector<Vec3>* curvature) {
  const ReducedState& z = c.state;
  const bool flat = c.problem->rcase == ReductionCase::flat_base;
  const BaseCovector dy = flat ? BaseCovector{r.pi_dot, r.sigma_dot} : covariant_dy(r.pi_dot, r.sigma_dot, z.x);
  const Vec3 lp = lie_poisson(c, r);
  const Vec3 twist = z.pi.cross(c.dh_dy.eta);
  std::vector<double> out;
  for (int j = 0; j < vars.hor.cols(); ++j) {
    const Vec6 dx = vars.hor.col(j);
    double v = dy.vec().dot(dx) + c.dh_dx.vec().dot(dx) + twist.dot(dx.head<3>());
    v += lp.dot((c.A - c.A_gnc) * dx);
    if (c.general() && curvature && !curvature->empty()) {
      v += z.mu.dot((*curvature)[static_cast<std::size_t>(j)]);
      v += c.s * z.mu.dot(ad(Vec3(c.A * dx), c.dh_dmu));
    }
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> vertical(const HdpContext& c, const ReducedRate& r, const ReducedVariations& vars) {
  const Vec3 lp = lie_poisson(c, r);
  std::vector<double> out;
  for (int j = 0; j < vars.ver.cols(); ++j) out.push_back(lp.dot(vars.ver.col(j)));
  return out;
}

inline BaseTangent base(const HdpContext& c, const BaseTangent& x_dot) {
  return BaseTangent::from(x_dot.vec() - c.dh_dy.vec());
}

}  // namespace detail

inline std::vector<double> horizontal_residuals(const HdpContext& c, const ReducedRate& r) {
  return detail::horizontal(c, r, c.vars, &c.curvature);
}

inline std::vector<double> vertical_residuals(const HdpContext& c, const ReducedRate& r) {
  return detail::vertical(c, r, c.vars);
}

inline std::vector<double> horizontal_residuals(const HdpProblem& p, const ReducedState& zeta,
                                                const ReducedRate& zeta_dot) {
  return horizontal_residuals(make_context(p, zeta), zeta_dot);
}

inline std::vector<double> vertical_residuals(const HdpProblem& p, const ReducedState& zeta,
                                              const ReducedRate& zeta_dot) {
  return vertical_residuals(make_context(p, zeta), zeta_dot);
}

inline BaseTangent base_equation_residual(const HdpProblem& p, const ReducedState& zeta, const BaseTangent& x_dot) {
  return BaseTangent::from(x_dot.vec() - p.h.fiber_y(zeta).vec());
}

inline HdpResiduals hdp_residuals(const HdpProblem& p, const ReducedState& zeta, const ReducedRate& zeta_dot) {
  const HdpContext c = make_context(p, zeta);
  HdpResiduals out;
  out.horizontal = horizontal_residuals(c, zeta_dot);
  out.vertical = vertical_residuals(c, zeta_dot);
  out.base = detail::base(c, zeta_dot.x_dot());
  for (const auto& k : p.constraints) {
    const linalg::Vector v = k.evaluate(zeta, zeta_dot);
    for (int i = 0; i < v.size(); ++i) out.kinematic.push_back(v(i));
  }
  return out;
}

struct ReducedStep {
  ReducedRate rate;
  ReducedRate free_rate;
  int rows = 0;
  int unknowns = ReducedRate::kSize;
  int rank = 0;
  int horizontal_dim = 0;
  int vertical_dim = 0;
  double solve_residual = 0.0;
};

namespace detail {

/// Rows of the HdP system for the given variations, as an affine map of the
/// rate: the matrix is read off by evaluating at 0 and at unit vectors.
inline RateRows hdp_rows(const HdpContext& c, const ReducedVariations& vars, const std::vector<Vec3>* curvature,
                         bool with_constraints) {
  const ReducedState& z = c.state;
  auto eval = [&](const Vec15& u) {
    const ReducedRate r = ReducedRate::from(u);
    std::vector<double> rows;
    const Vec6 b = base(c, r.x_dot()).vec();
    rows.insert(rows.end(), b.data(), b.data() + 6);
    const auto hr = horizontal(c, r, vars, curvature);
    rows.insert(rows.end(), hr.begin(), hr.end());
    const auto vr = vertical(c, r, vars);
    rows.insert(rows.end(), vr.begin(), vr.end());
    rows.push_back(z.x.e.dot(r.sigma_dot) + z.sigma.dot(r.e_dot));
    return linalg::Vector(Eigen::Map<const linalg::Vector>(rows.data(), static_cast<int>(rows.size())));
  };
  const linalg::Vector r0 = eval(Vec15::Zero());
  linalg::Matrix A(r0.size(), 15);
  for (int i = 0; i < 15; ++i) A.col(i) = eval(Vec15::Unit(i)) - r0;
  RateRows out{A, -r0};
  if (with_constraints) {
    for (const auto& k : c.problem->constraints) {
      const RateRows kr = k.rate_rows(z);
      linalg::Matrix A2(out.A.rows() + kr.A.rows(), 15);
      A2 << out.A, kr.A;
      linalg::Vector b2(out.b.size() + kr.b.size());
      b2 << out.b, kr.b;
      out = {A2, b2};
    }
  }
  return out;
}

inline double residual_tolerance(const linalg::Vector& b) { return 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff()); }

}  // namespace detail

/// Solves the base, horizontal, vertical and differentiated kinematic
/// equations for the rate. Among the solutions, the one closest to the
/// unconstrained Hamilton–Poincaré rate is returned.
inline ReducedStep solve_reduced_step_detailed(const HdpProblem& p, const ReducedState& zeta) {
  const HdpContext c = make_context(p, zeta);
  ReducedStep out;

  const ReducedVariations all = free_variations(zeta.x);
  std::vector<Vec3> all_curv;
  if (c.general() && !p.A.is_trivial()) {
    for (int j = 0; j < all.hor.cols(); ++j) {
      all_curv.push_back(reduced_curvature(p.A, zeta.x, c.dh_dy, BaseTangent::from(all.hor.col(j))));
    }
  }
  const RateRows fr = detail::hdp_rows(c, all, &all_curv, false);
  const linalg::LeastSquares free = linalg::min_norm_solve(fr.A, fr.b);
  if (free.residual > detail::residual_tolerance(fr.b)) {
    throw Error(ErrorKind::Inconsistent, "unconstrained reduced system is singular");
  }

  const RateRows rows = detail::hdp_rows(c, c.vars, &c.curvature, true);
  const linalg::LeastSquares d = linalg::min_norm_solve(rows.A, rows.b - rows.A * free.x);
  const linalg::Vector u = free.x + d.x;
  out.solve_residual = (rows.A * u - rows.b).cwiseAbs().maxCoeff();
  out.rows = static_cast<int>(rows.A.rows());
  out.rank = d.rank;
  out.horizontal_dim = static_cast<int>(c.vars.hor.cols());
  out.vertical_dim = static_cast<int>(c.vars.ver.cols());
  out.free_rate = ReducedRate::from(free.x);
  out.rate = ReducedRate::from(u);
  if (out.solve_residual > detail::residual_tolerance(rows.b)) {
    throw Error(ErrorKind::Inconsistent, "reduced step residual " + std::to_string(out.solve_residual) +
                                             " (rank " + std::to_string(d.rank) + " of " +
                                             std::to_string(out.rows) + " rows)");
  }
  return out;
}

inline ReducedRate solve_reduced_step(const HdpProblem& p, const ReducedState& zeta) {
  return solve_reduced_step_detailed(p, zeta).rate;
}

namespace detail {

/// Physical momenta of a state written in the coordinates of conn:
/// y + 𝒜(x)^* mu, mu unchanged.
inline ReducedState unshift(const ReducedState& s, const ConnectionForm& conn) {
  ReducedState out = s;
  const BaseCovector c = conn.dual(s, s.mu);
  out.pi += c.eta;
  out.sigma += c.de;
  return out;
}

inline ReducedState shift(const ReducedState& s, const ConnectionForm& conn) {
  ReducedState out = s;
  const BaseCovector c = conn.dual(s, s.mu);
  out.pi -= c.eta;
  out.sigma -= c.de;
  return out;
}

/// Jacobian of unshift along the flow: rate in conn coordinates -> rate of
/// the physical state, by central differences of the exact linear map.
inline Eigen::Matrix<double, 15, 15> unshift_jacobian(const ReducedState& s, const ConnectionForm& conn) {
  const double h = 1e-6;
  auto moved = [&](const Vec15& u, double t) {
    ReducedState m = advance(s, ReducedRate::from(u), t);
    m.x.e.normalize();
    return unshift(m, conn);
  };
  Eigen::Matrix<double, 15, 15> J;
  for (int k = 0; k < 15; ++k) {
    const Vec15 u = Vec15::Unit(k);
    const ReducedState p = moved(u, h), m = moved(u, -h);
    J.col(k) = u;
    J.block<3, 1>(6, k) = (p.pi - m.pi) / (2.0 * h);
    J.block<3, 1>(9, k) = (p.sigma - m.sigma) / (2.0 * h);
  }
  return J;
}

}  // namespace detail

/// The problem restated with descriptive connection conn: h, its fiber
/// derivatives and the kinematic constraints are composed with the change of
/// fiber coordinates y -> y + 𝒜^* mu. The base derivative falls back to
/// finite differences. Requires the trivial connection on input.
inline HdpProblem rebase(const HdpProblem& p, const ConnectionForm& conn) {
  if (!p.A.is_trivial()) throw Error(ErrorKind::ConfigError, "rebase expects the trivial descriptive connection");
  HdpProblem out = p;
  out.A = conn;
  out.rcase = conn.is_trivial() ? p.rcase : ReductionCase::general;
  const ReducedHamiltonian h = p.h;
  out.h = ReducedHamiltonian{};
  out.h.value = [h, conn](const ReducedState& s) { return h.value(detail::unshift(s, conn)); };
  out.h.dh_dy = [h, conn](const ReducedState& s) { return h.fiber_y(detail::unshift(s, conn)); };
  out.h.dh_dmu = [h, conn](const ReducedState& s) {
    const ReducedState u = detail::unshift(s, conn);
    return Vec3(h.fiber_mu(u) + conn(s, h.fiber_y(u)));
  };
  out.constraints.clear();
  for (const ReducedConstraint& k : p.constraints) {
    ReducedConstraint c = k;
    if (k.residual) c.residual = [k, conn](const ReducedState& s) { return k.residual(detail::unshift(s, conn)); };
    c.rate_rows = [k, conn](const ReducedState& s) {
      const RateRows r = k.rate_rows(detail::unshift(s, conn));
      return RateRows{r.A * detail::unshift_jacobian(s, conn), r.b};
    };
    if (k.project) {
      c.project = [k, conn](const ReducedState& s) { return detail::shift(k.project(detail::unshift(s, conn)), conn); };
    }
    out.constraints.push_back(std::move(c));
  }
  return out;
}

}  // namespace hdp
