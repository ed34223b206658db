#pragma once

// Trivialized state spaces for Q = SO(3) x S^2 x SO(3) with the right action
// C -> C B of G = SO(3) on the last factor. Group velocities are
// right-trivialized (eta = vee(R' R^T), xi = vee(C' C^T)); S^2 points,
// tangents and covectors are embedded in R^3.

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "hdp/algebra.hpp"

namespace hdp {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Vec18 = Eigen::Matrix<double, 18, 1>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

inline const Vec3 kUp(0.0, 0.0, 1.0);

/// v - (e.v) e
inline Vec3 project_sphere_tangent(const Vec3& e, const Vec3& v) { return v - e.dot(v) * e; }

/// Orthonormal basis (t1, t2) of T_e S^2 with t1 x t2 = e. Continuous away
/// from e = -x.
inline std::array<Vec3, 2> sphere_tangent_basis(const Vec3& e_in) {
  const Vec3 e = e_in.normalized();
  const Vec3 seed = std::abs(e.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = project_sphere_tangent(e, seed).normalized();
  return {t1, e.cross(t1)};
}

/// A point of the base X = SO(3) x S^2.
struct BasePoint {
  Mat3 R = Mat3::Identity();
  Vec3 e = kUp;
};

/// A tangent vector of X: right-trivialized rotation rate and an embedded
/// tangent vector of S^2 at e.
struct BaseTangent {
  Vec3 eta = Vec3::Zero();
  Vec3 de = Vec3::Zero();

  Vec6 vec() const { return (Vec6() << eta, de).finished(); }
  static BaseTangent from(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
};

/// A cotangent vector of X in the same embedding (sigma-slot tangent to S^2).
using BaseCovector = BaseTangent;

inline double pair(const BaseCovector& a, const BaseTangent& b) {
  return a.eta.dot(b.eta) + a.de.dot(b.de);
}

/// A tangent vector of Q at (R, e, C): (eta, de, xi), all right-trivialized.
struct TQVector {
  Vec3 eta = Vec3::Zero();
  Vec3 de = Vec3::Zero();
  Vec3 xi = Vec3::Zero();

  Vec9 vec() const { return (Vec9() << eta, de, xi).finished(); }
  static TQVector from(const Vec9& v) { return {v.segment<3>(0), v.segment<3>(3), v.segment<3>(6)}; }
  BaseTangent base() const { return {eta, de}; }
};

/// (R, pi, e, sigma, C, gamma) in T*Q.
struct FullState {
  Mat3 R = Mat3::Identity();
  Vec3 pi = Vec3::Zero();
  Vec3 e = kUp;
  Vec3 sigma = Vec3::Zero();
  Mat3 C = Mat3::Identity();
  Vec3 gamma = Vec3::Zero();

  BasePoint base() const { return {R, e}; }
  Vec9 momenta() const { return (Vec9() << pi, sigma, gamma).finished(); }
};

/// (x, y, mu) in T*X x g*, with y = (pi, sigma).
struct ReducedState {
  BasePoint x;
  Vec3 pi = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
  Vec3 mu = Vec3::Zero();

  BaseCovector y() const { return {pi, sigma}; }
  Vec9 momenta() const { return (Vec9() << pi, sigma, mu).finished(); }
};

/// Time derivative of a FullState: R' = hat(eta) R, C' = hat(xi) C.
struct FullRate {
  Vec3 eta = Vec3::Zero();
  Vec3 e_dot = Vec3::Zero();
  Vec3 xi = Vec3::Zero();
  Vec3 pi_dot = Vec3::Zero();
  Vec3 sigma_dot = Vec3::Zero();
  Vec3 gamma_dot = Vec3::Zero();

  static constexpr int kSize = 18;
  Vec18 vec() const { return (Vec18() << eta, e_dot, xi, pi_dot, sigma_dot, gamma_dot).finished(); }
  static FullRate from(const Vec18& v) {
    return {v.segment<3>(0), v.segment<3>(3), v.segment<3>(6),
            v.segment<3>(9), v.segment<3>(12), v.segment<3>(15)};
  }
};

/// Time derivative of a ReducedState: (x', y', mu') with R' = hat(eta) R.
struct ReducedRate {
  Vec3 eta = Vec3::Zero();
  Vec3 e_dot = Vec3::Zero();
  Vec3 pi_dot = Vec3::Zero();
  Vec3 sigma_dot = Vec3::Zero();
  Vec3 mu_dot = Vec3::Zero();

  static constexpr int kSize = 15;
  BaseTangent x_dot() const { return {eta, e_dot}; }
  Vec15 vec() const { return (Vec15() << eta, e_dot, pi_dot, sigma_dot, mu_dot).finished(); }
  static ReducedRate from(const Vec15& v) {
    return {v.segment<3>(0), v.segment<3>(3), v.segment<3>(6), v.segment<3>(9), v.segment<3>(12)};
  }
};

/// s advanced by h times the rate; rotations move by exp(h·eta) R so they
/// stay on SO(3).
inline FullState advance(const FullState& s, const FullRate& r, double h) {
  FullState out = s;
  out.R = exp_so3(h * r.eta) * s.R;
  out.pi = s.pi + h * r.pi_dot;
  out.e = s.e + h * r.e_dot;
  out.sigma = s.sigma + h * r.sigma_dot;
  out.C = exp_so3(h * r.xi) * s.C;
  out.gamma = s.gamma + h * r.gamma_dot;
  return out;
}

inline ReducedState advance(const ReducedState& s, const ReducedRate& r, double h) {
  ReducedState out = s;
  out.x.R = exp_so3(h * r.eta) * s.x.R;
  out.x.e = s.x.e + h * r.e_dot;
  out.pi = s.pi + h * r.pi_dot;
  out.sigma = s.sigma + h * r.sigma_dot;
  out.mu = s.mu + h * r.mu_dot;
  return out;
}

/// dexp⁻¹_Θ(v) truncated after the second bracket, enough for fourth order.
inline Vec3 dexp_inv(const Vec3& theta, const Vec3& v) {
  return v - 0.5 * theta.cross(v) + theta.cross(theta.cross(v)) / 12.0;
}

/// Munthe-Kaas stage correction: k's rotation slots are pulled back through
/// the increment Θ = h·(rotation slots of prev) that produced the stage.
inline FullRate stage_correct(const FullRate& k, const FullRate& prev, double h) {
  FullRate out = k;
  out.eta = dexp_inv(h * prev.eta, k.eta);
  out.xi = dexp_inv(h * prev.xi, k.xi);
  return out;
}

inline ReducedRate stage_correct(const ReducedRate& k, const ReducedRate& prev, double h) {
  ReducedRate out = k;
  out.eta = dexp_inv(h * prev.eta, k.eta);
  return out;
}

/// Worst violation of the embedding invariants (orthonormality, |e| = 1, sigma.e = 0).
inline double manifold_error(const FullState& s) {
  return std::max({orthonormality_error(s.R), orthonormality_error(s.C), std::abs(s.e.norm() - 1.0),
                   std::abs(s.sigma.dot(s.e))});
}

inline double manifold_error(const ReducedState& s) {
  return std::max({orthonormality_error(s.x.R), std::abs(s.x.e.norm() - 1.0),
                   std::abs(s.sigma.dot(s.x.e))});
}

/// Restores rotation, unit-sphere and cotangency invariants.
inline FullState project_manifold(const FullState& s) {
  FullState out = s;
  out.R = orthonormalize(s.R);
  out.C = orthonormalize(s.C);
  out.e = s.e.normalized();
  out.sigma = project_sphere_tangent(out.e, s.sigma);
  return out;
}

inline ReducedState project_manifold(const ReducedState& s) {
  ReducedState out = s;
  out.x.R = orthonormalize(s.x.R);
  out.x.e = s.x.e.normalized();
  out.sigma = project_sphere_tangent(out.x.e, s.sigma);
  return out;
}

/// Max-abs difference between two reduced states (rotation entries included).
inline double state_distance(const ReducedState& a, const ReducedState& b) {
  return std::max({(a.x.R - b.x.R).cwiseAbs().maxCoeff(), (a.x.e - b.x.e).cwiseAbs().maxCoeff(),
                   (a.pi - b.pi).cwiseAbs().maxCoeff(), (a.sigma - b.sigma).cwiseAbs().maxCoeff(),
                   (a.mu - b.mu).cwiseAbs().maxCoeff()});
}

inline double state_distance(const FullState& a, const FullState& b) {
  return std::max({(a.R - b.R).cwiseAbs().maxCoeff(), (a.pi - b.pi).cwiseAbs().maxCoeff(),
                   (a.e - b.e).cwiseAbs().maxCoeff(), (a.sigma - b.sigma).cwiseAbs().maxCoeff(),
                   (a.C - b.C).cwiseAbs().maxCoeff(), (a.gamma - b.gamma).cwiseAbs().maxCoeff()});
}

/// Orthonormal (Euclidean) basis of T_x X embedded in R^6: three eta
/// directions and two sphere tangents.
inline Eigen::Matrix<double, 6, 5> base_tangent_basis(const BasePoint& x) {
  const auto t = sphere_tangent_basis(x.e);
  Eigen::Matrix<double, 6, 5> b = Eigen::Matrix<double, 6, 5>::Zero();
  b.topLeftCorner<3, 3>().setIdentity();
  b.block<3, 1>(3, 3) = t[0];
  b.block<3, 1>(3, 4) = t[1];
  return b;
}

/// Orthonormal (Euclidean) basis of T_q Q embedded in R^9 (8 columns).
inline Eigen::Matrix<double, 9, 8> tq_basis(const Vec3& e) {
  const auto t = sphere_tangent_basis(e);
  Eigen::Matrix<double, 9, 8> b = Eigen::Matrix<double, 9, 8>::Zero();
  b.topLeftCorner<3, 3>().setIdentity();
  b.block<3, 1>(3, 3) = t[0];
  b.block<3, 1>(3, 4) = t[1];
  b.bottomRightCorner<3, 3>().setIdentity();
  return b;
}

}  // namespace hdp
