#pragma once

// Connection forms on the trivial bundle Q = X x SO(3) and the Atiyah maps
// they induce, written in the right trivialization.

#include <functional>
#include <string>
#include <utility>

#include "hdp/state.hpp"

namespace hdp {

/// The g-valued 1-form 𝒜 on X of a principal connection
/// A(x, C, x', xi) = C^T (𝒜(x) x' + xi). Stored as an evaluator returning the
/// 3x6 matrix acting on (eta, de). An l-connection may also read the
/// constraint argument zeta, passed as the (trivially) reduced state.
class ConnectionForm {
 public:
  using Evaluator = std::function<Mat36(const ReducedState& zeta)>;
  /// Optional analytic d𝒜(u, v) at x.
  using Exterior = std::function<Vec3(const BasePoint&, const BaseTangent&, const BaseTangent&)>;

  ConnectionForm() = default;
  ConnectionForm(Evaluator f, std::string name, bool zeta_dependent = false)
      : f_(std::move(f)), name_(std::move(name)), zeta_dependent_(zeta_dependent) {}

  static ConnectionForm trivial() {
    ConnectionForm c;
    c.name_ = "trivial";
    return c;
  }

  ConnectionForm with_exterior(Exterior d) const {
    ConnectionForm c = *this;
    c.exterior_ = std::move(d);
    return c;
  }
  const Exterior& exterior() const { return exterior_; }

  bool is_trivial() const { return !f_; }
  bool zeta_dependent() const { return zeta_dependent_; }
  const std::string& name() const { return name_; }

  Mat36 matrix(const ReducedState& zeta) const {
    if (!f_) return Mat36::Zero();
    return f_(zeta);
  }
  Mat36 matrix(const BasePoint& x) const {
    ReducedState z;
    z.x = x;
    return matrix(z);
  }

  /// 𝒜(x) v
  Vec3 operator()(const ReducedState& zeta, const BaseTangent& v) const { return matrix(zeta) * v.vec(); }
  Vec3 operator()(const BasePoint& x, const BaseTangent& v) const { return matrix(x) * v.vec(); }

  /// 𝒜(x)^* mu as a base covector (sigma-slot projected onto T_e S^2).
  BaseCovector dual(const ReducedState& zeta, const Vec3& mu) const {
    const Vec6 c = matrix(zeta).transpose() * mu;
    return {c.head<3>(), project_sphere_tangent(zeta.x.e, c.tail<3>())};
  }

 private:
  Evaluator f_;
  Exterior exterior_;
  std::string name_ = "trivial";
  bool zeta_dependent_ = false;
};

/// J(R, pi, e, sigma, C, gamma) = C^{-1} gamma.
inline Vec3 momentum_map(const FullState& s) { return s.C.transpose() * s.gamma; }

/// Lifted right action on T*Q: C -> C B.
inline FullState act(const FullState& s, const Mat3& B) {
  FullState out = s;
  out.C = s.C * B;
  return out;
}

/// State with C dropped and mu = gamma: the reduced state for the trivial
/// connection, also used as the constraint argument [zeta].
inline ReducedState drop_group(const FullState& s) {
  ReducedState r;
  r.x = s.base();
  r.pi = s.pi;
  r.sigma = s.sigma;
  r.mu = s.gamma;
  return r;
}

/// Atiyah cotangent map T*Q/G -> T*X x g*:
/// (x, y, mu) = ((x, y - 𝒜(x)^*(Ad*_C J)), Ad*_C J), with Ad*_C J = gamma.
inline ReducedState atiyah_cotangent(const FullState& s, const ConnectionForm& conn,
                                     double tangency_tol = 1e-6) {
  ReducedState r = drop_group(s);
  r.mu = s.C * momentum_map(s);
  if (conn.is_trivial()) return r;
  const Vec6 c = conn.matrix(drop_group(s)).transpose() * r.mu;
  r.pi = s.pi - c.head<3>();
  r.sigma = s.sigma - c.tail<3>();
  const double scale = 1.0 + s.sigma.norm() + c.tail<3>().norm();
  if (std::abs(r.sigma.dot(s.e)) > tangency_tol * scale) {
    throw Error(ErrorKind::ProjectionFailure, "sigma-slot off T*S^2 by " + std::to_string(r.sigma.dot(s.e)));
  }
  r.sigma = project_sphere_tangent(s.e, r.sigma);
  return r;
}

/// Inverse of atiyah_cotangent at group element C.
inline FullState atiyah_cotangent_inverse(const ReducedState& r, const ConnectionForm& conn, const Mat3& C) {
  FullState s;
  s.R = r.x.R;
  s.e = r.x.e;
  s.C = C;
  s.gamma = r.mu;
  s.pi = r.pi;
  s.sigma = r.sigma;
  if (!conn.is_trivial()) {
    // The connection argument is the trivially reduced state, which needs
    // (pi, sigma) itself; l-connections here depend on x only, so evaluate at r.
    const Vec6 c = conn.matrix(r).transpose() * r.mu;
    s.pi += c.head<3>();
    s.sigma += project_sphere_tangent(r.x.e, c.tail<3>());
  }
  return s;
}

/// Atiyah map TQ/G -> TX x g: (x', xi) -> (x', 𝒜(x) x' + xi), with xi the
/// right-trivialized group velocity. The group element only enters through
/// the Ad-equivariance of the right trivialization, so it is unused.
inline std::pair<BaseTangent, Vec3> atiyah_forward(const BasePoint& x, const Mat3& /*h*/,
                                                   const BaseTangent& xdot, const Vec3& hdot_body,
                                                   const ConnectionForm& conn) {
  return {xdot, conn(x, xdot) + hdot_body};
}

/// Full connection form A(q, v) = C^T (𝒜(x) v_x + xi).
inline Vec3 connection_value(const ConnectionForm& conn, const FullState& q, const TQVector& v) {
  return q.C.transpose() * (conn(drop_group(q), v.base()) + v.xi);
}

}  // namespace hdp
