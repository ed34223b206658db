#pragma once

// SO(3) / so(3) kernel. so(3) and so(3)* are both identified with R^3; the
// bracket is the cross product and the pairing is the dot product.

#include <Eigen/Dense>
#include <cmath>

#include "hdp/errors.hpp"

namespace hdp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kRotTol = 1e-9;

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  // clang-format off
  m <<  0.0,   -v.z(),  v.y(),
        v.z(),  0.0,   -v.x(),
       -v.y(),  v.x(),  0.0;
  // clang-format on
  return m;
}

/// Inverse of hat. Throws NotSkew if the symmetric part exceeds `tol`.
inline Vec3 vee(const Mat3& m, double tol = kRotTol) {
  const double sym = (0.5 * (m + m.transpose())).cwiseAbs().maxCoeff();
  if (!(sym <= tol)) {
    throw Error(ErrorKind::NotSkew, "symmetric part " + std::to_string(sym));
  }
  const Mat3 k = 0.5 * (m - m.transpose());
  return Vec3(k(2, 1), k(0, 2), k(1, 0));
}

/// Rodrigues formula; below |v| = 1e-6 the series I + hat(v) + hat(v)^2/2 is used.
inline Mat3 exp_so3(const Vec3& v) {
  const double theta = v.norm();
  const Mat3 k = hat(v);
  if (theta < 1e-6) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

/// Ad_g v, i.e. vee(g hat(v) g^T) = g v.
inline Vec3 adjoint(const Mat3& g, const Vec3& v) { return g * v; }

/// ad_xi v = [xi, v].
inline Vec3 ad(const Vec3& xi, const Vec3& v) { return xi.cross(v); }

/// ad*_xi mu = mu x xi, the transpose of ad_xi under the dot pairing.
inline Vec3 ad_star(const Vec3& xi, const Vec3& mu) { return mu.cross(xi); }

inline double orthonormality_error(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

inline bool is_rotation(const Mat3& m, double tol = kRotTol) {
  return orthonormality_error(m) <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

/// Polar factor of m (closest rotation in Frobenius norm). Throws Degenerate
/// when m is singular or orientation reversing.
inline Mat3 orthonormalize(const Mat3& m) {
  const double det = m.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw Error(ErrorKind::Degenerate, "determinant " + std::to_string(det));
  }
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv.minCoeff() <= 1e-14 * sv.maxCoeff()) {
    throw Error(ErrorKind::Degenerate, "singular matrix");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Rotation about a unit axis by `angle`.
inline Mat3 rotation(const Vec3& axis, double angle) {
  return exp_so3(axis.normalized() * angle);
}

}  // namespace hdp
