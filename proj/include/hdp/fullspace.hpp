#pragma once

// The unreduced constrained system on T*Q: Hamilton's equations with
// constraint forces from the annihilator of the variational distribution,
// multipliers fixed by the differentiated kinematic constraints.

#include <functional>
#include <string>
#include <vector>

#include "hdp/bundle.hpp"
#include "hdp/constraints.hpp"
#include "hdp/derivatives.hpp"
#include "hdp/params.hpp"

namespace hdp {

/// Covectors on Q share the (eta, de, xi) layout of TQVector.
using TQCovector = TQVector;

struct FullHamiltonian {
  std::function<double(const FullState&)> value;
  std::function<TQVector(const FullState&)> fiber;   // 𝔽H
  std::function<TQCovector(const FullState&)> base;  // 𝔹H: right-trivialized on SO(3), transported sigma on S^2

  TQVector fd_fiber(const FullState& s) const {
    TQVector d;
    d.eta = fd::gradient3([&](const Vec3& p) { FullState t = s; t.pi = p; return value(t); }, s.pi);
    d.de = fd::tangent_gradient([&](const Vec3& q) { FullState t = s; t.sigma = q; return value(t); }, s.e,
                                s.sigma);
    d.xi = fd::gradient3([&](const Vec3& g) { FullState t = s; t.gamma = g; return value(t); }, s.gamma);
    return d;
  }

  TQCovector fd_base(const FullState& s) const {
    TQCovector d;
    d.eta = fd::rotation_gradient([&](const Mat3& R) { FullState t = s; t.R = R; return value(t); }, s.R);
    d.de = fd::sphere_base_gradient(
        [&](const Vec3& e, const Vec3& sig) {
          FullState t = s;
          t.e = e;
          t.sigma = sig;
          return value(t);
        },
        s.e, s.sigma);
    d.xi = fd::rotation_gradient([&](const Mat3& C) { FullState t = s; t.C = C; return value(t); }, s.C);
    return d;
  }

  TQVector fiber_derivative(const FullState& s) const { return fiber ? fiber(s) : fd_fiber(s); }
  TQCovector base_derivative(const FullState& s) const { return base ? base(s) : fd_base(s); }
};

using FullConstraint = KinematicConstraint<FullState>;

/// F_V = (C_V)°, as Euclidean-orthonormal columns in R^9 (sigma slot tangent).
struct ForceSpace {
  linalg::Matrix covectors;
  int dim() const { return static_cast<int>(covectors.cols()); }
};

struct FullDynamics {
  std::string name;
  FullHamiltonian H;
  std::function<std::vector<TQVector>(const FullState&)> variations;
  std::vector<FullConstraint> constraints;
};

/// Covectors at a point with sphere slot e annihilating all generators.
inline ForceSpace annihilator_basis(const Vec3& e, const std::vector<TQVector>& generators) {
  const Eigen::Matrix<double, 9, 8> B = tq_basis(e);
  if (generators.empty()) return {B};
  linalg::Matrix G(9, static_cast<int>(generators.size()));
  for (std::size_t j = 0; j < generators.size(); ++j) G.col(static_cast<int>(j)) = generators[j].vec();
  const linalg::Matrix N = linalg::null_space(G.transpose() * B);
  return {B * N};
}

inline ForceSpace force_space(const FullDynamics& d, const FullState& s) {
  return annihilator_basis(s.e, d.variations(s));
}

struct FullStep {
  FullRate rate;
  FullRate free_rate;
  ForceSpace forces;
  linalg::Vector multipliers;
  Vec9 force = Vec9::Zero();  // Σ λ_i f_i
  int rows = 0;
  int unknowns = FullRate::kSize;
  int rank = 0;
  double solve_residual = 0.0;
};

namespace detail {

/// D/Dt p + 𝔹H paired with variations, and the base equation q' = 𝔽H, as an
/// affine function of the 18-dimensional rate.
inline RateRows cangen_rows(const FullDynamics& d, const FullState& s, const linalg::Matrix& variations,
                            bool with_constraints) {
  const TQVector fh = d.H.fiber_derivative(s);
  const TQCovector bh = d.H.base_derivative(s);
  auto eval = [&](const Vec18& u) {
    const FullRate r = FullRate::from(u);
    linalg::Vector rows(9 + variations.cols() + 1);
    rows.segment<3>(0) = r.eta - fh.eta;
    rows.segment<3>(3) = r.e_dot - fh.de;
    rows.segment<3>(6) = r.xi - fh.xi;
    Vec9 p;
    p << r.pi_dot + s.pi.cross(fh.eta) + bh.eta, project_sphere_tangent(s.e, r.sigma_dot) + bh.de,
        r.gamma_dot + s.gamma.cross(fh.xi) + bh.xi;
    rows.segment(9, variations.cols()) = variations.transpose() * p;
    rows(rows.size() - 1) = s.e.dot(r.sigma_dot) + s.sigma.dot(r.e_dot);
    return rows;
  };
  const linalg::Vector r0 = eval(Vec18::Zero());
  linalg::Matrix A(r0.size(), 18);
  for (int i = 0; i < 18; ++i) A.col(i) = eval(Vec18::Unit(i)) - r0;
  RateRows out{A, -r0};
  if (with_constraints) {
    for (const auto& k : d.constraints) {
      const RateRows kr = k.rate_rows(s);
      linalg::Matrix A2(out.A.rows() + kr.A.rows(), 18);
      A2 << out.A, kr.A;
      linalg::Vector b2(out.b.size() + kr.b.size());
      b2 << out.b, kr.b;
      out = {A2, b2};
    }
  }
  return out;
}

}  // namespace detail

/// Base velocity 𝔽H(s), momentum rate −𝔹H(s) + Σ λ_i f_i with f_i ∈ F_V and
/// the smallest |λ| for which the differentiated constraints hold.
inline FullStep full_vector_field_detailed(const FullDynamics& d, const FullState& s) {
  FullStep out;
  const RateRows fr = detail::cangen_rows(d, s, tq_basis(s.e), false);
  const linalg::LeastSquares free = linalg::min_norm_solve(fr.A, fr.b);
  if (free.residual > 1e-8 * std::max(1.0, fr.b.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::Inconsistent, "unconstrained full system is singular");
  }
  const std::vector<TQVector> gens = d.variations(s);
  linalg::Matrix G(9, static_cast<int>(gens.size()));
  for (std::size_t j = 0; j < gens.size(); ++j) G.col(static_cast<int>(j)) = gens[j].vec();
  const linalg::Matrix V = linalg::orthonormalize(G, 1e-8).columns;

  const RateRows rows = detail::cangen_rows(d, s, V, true);
  const linalg::LeastSquares sol = linalg::min_norm_solve(rows.A, rows.b - rows.A * free.x);
  const linalg::Vector u = free.x + sol.x;
  out.solve_residual = (rows.A * u - rows.b).cwiseAbs().maxCoeff();
  out.rows = static_cast<int>(rows.A.rows());
  out.rank = sol.rank;
  out.rate = FullRate::from(u);
  out.free_rate = FullRate::from(free.x);
  out.forces = annihilator_basis(s.e, gens);
  out.force = u.tail<9>() - free.x.tail<9>();
  out.multipliers = out.forces.covectors.transpose() * out.force;
  if (out.solve_residual > 1e-8 * std::max(1.0, rows.b.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::Inconsistent, "multiplier solve residual " + std::to_string(out.solve_residual));
  }
  return out;
}

inline std::pair<FullRate, linalg::Vector> full_vector_field(const FullDynamics& d, const FullState& s) {
  FullStep st = full_vector_field_detailed(d, s);
  return {st.rate, st.multipliers};
}

/// dV along the state in the 18-dimensional rate layout (xi slot zero).
inline Vec18 lyapunov_differential(const LyapunovSpec& l, const FullState& s) {
  const Vec9 p = s.momenta();
  const BasePoint x = s.base();
  const BaseCovector dv = l.dv(x);
  Vec18 d = Vec18::Zero();
  d.segment<3>(0) = dv.eta;
  d.segment<3>(3) = dv.de;
  if (!l.phi_constant) {
    auto quad = [&](const BasePoint& y) { return 0.5 * p.dot(l.phi(y) * p); };
    d.segment<3>(0) += fd::rotation_gradient([&](const Mat3& R) { return quad({R, x.e}); }, x.R);
    d.segment<3>(3) += fd::gradient3([&](const Vec3& e) { return quad({x.R, e}); }, x.e);
  }
  d.tail<9>() = l.phi(x) * p;
  return d;
}

/// ⟨dV(s), s'⟩ + μ_rate(s).
inline double lyapunov_residual(const LyapunovSpec& l, const FullState& s, const FullRate& s_dot) {
  return lyapunov_differential(l, s).dot(s_dot.vec()) + l.mu_rate(s);
}

/// w = (r1/I1) π + (r2/I2) γ, the combination entering the rolling condition.
inline Vec3 rolling_omega(const BallParams& p, const Vec3& pi, const Vec3& gamma) {
  return (p.r1 / p.I1) * pi + (p.r2 / p.I2) * gamma;
}

/// σ/m2 − (1/(r1+r2)) w × e.
inline Vec3 rolling_residual(const Vec3& pi, const Vec3& e, const Vec3& sigma, const Vec3& gamma,
                             const BallParams& p) {
  return sigma / p.m2 - p.k() * rolling_omega(p, pi, gamma).cross(e);
}

inline Vec3 rolling_residual(const FullState& s, const BallParams& p) {
  return rolling_residual(s.pi, s.e, s.sigma, s.gamma, p);
}

}  // namespace hdp
