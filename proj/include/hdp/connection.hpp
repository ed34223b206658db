#pragma once

// Reduced curvature, the generalized nonholonomic connection built from a
// variational distribution and a kinetic metric, and the phi-map relating
// two connections.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hdp/bundle.hpp"
#include "hdp/linalg.hpp"

namespace hdp {


/// Kinetic-energy metric on TQ in the (eta, de, xi) embedding.
using KineticMetric = std::function<Mat9(const ReducedState& zeta)>;

/// Variations C_V(zeta): a spanning list of TQ vectors at the base point of
/// zeta. Generators are right-trivialized, so by G-invariance they do not
/// depend on C.
struct VariationalDistribution {
  std::function<std::vector<TQVector>(const ReducedState& zeta)> generators;
  std::string name;
  bool depends_on_momenta = false;
};

/// Orthonormal (w.r.t. the kinetic metric) bases of the spaces used to build
/// the generalized nonholonomic connection. Columns are R^9 TQ vectors.
struct GncDecomposition {
  linalg::Matrix metric;
  linalg::Matrix CV;  // C_V(zeta)
  linalg::Matrix V;   // vertical space
  linalg::Matrix S;   // C_V ∩ V
  linalg::Matrix T;   // complement of S in C_V
  linalg::Matrix U;   // complement of S in V
  linalg::Matrix R;   // complement of C_V + V in TQ
  linalg::Matrix H;   // horizontal space R ⊕ T
  int dropped_generators = 0;

  /// Splits v ∈ TQ into (horizontal, vertical) parts.
  std::pair<Vec9, Vec9> split(const Vec9& v) const {
    linalg::Matrix HV(9, H.cols() + V.cols());
    HV << H, V;
    const linalg::Vector c = HV.colPivHouseholderQr().solve(v);
    const Vec9 vert = V * c.tail(V.cols());
    return {v - vert, vert};
  }

  /// Largest violation of the defining orthogonality/dimension relations.
  double invariant_violation() const {
    const linalg::Matrix& G = metric;
    auto cross = [&](const linalg::Matrix& a, const linalg::Matrix& b) {
      if (a.cols() == 0 || b.cols() == 0) return 0.0;
      return (a.transpose() * G * b).cwiseAbs().maxCoeff();
    };
    auto inside = [&](const linalg::Matrix& a, const linalg::Matrix& span) {
      if (a.cols() == 0) return 0.0;
      if (span.cols() == 0) return a.cwiseAbs().maxCoeff();
      const linalg::Matrix coef = span.transpose() * G * a;
      return (a - span * coef).cwiseAbs().maxCoeff();
    };
    double v = 0.0;
    v = std::max(v, cross(T, S));
    v = std::max(v, cross(U, S));
    v = std::max(v, cross(R, CV));
    v = std::max(v, cross(R, V));
    v = std::max(v, cross(R, T));
    v = std::max(v, inside(S, CV));
    v = std::max(v, inside(S, V));
    v = std::max(v, inside(T, CV));
    v = std::max(v, inside(U, V));
    const int dim_ok = (H.cols() + V.cols() == 8) && (S.cols() + T.cols() == CV.cols()) &&
                       (S.cols() + U.cols() == V.cols());
    return dim_ok ? v : std::max(v, 1.0);
  }
};

namespace detail {

inline linalg::Matrix columns_of(const std::vector<TQVector>& vs) {
  linalg::Matrix m(9, static_cast<int>(vs.size()));
  for (std::size_t j = 0; j < vs.size(); ++j) m.col(static_cast<int>(j)) = vs[j].vec();
  return m;
}

inline linalg::Matrix vertical_generators() {
  linalg::Matrix v = linalg::Matrix::Zero(9, 3);
  v.bottomRows<3>().setIdentity();
  return v;
}

inline GncDecomposition decompose(const VariationalDistribution& dist, const KineticMetric& metric,
                                  const ReducedState& zeta) {
  GncDecomposition d;
  d.metric = metric(zeta);
  const linalg::Matrix& G = d.metric;
  const linalg::Matrix gens = columns_of(dist.generators(zeta));
  const linalg::Basis cv = linalg::orthonormalize(gens, G);
  d.CV = cv.columns;
  d.dropped_generators = cv.dropped;
  d.V = linalg::orthonormalize(vertical_generators(), G).columns;
  d.S = linalg::intersection(d.CV, d.V, G);
  d.T = linalg::complement(d.S, d.CV, G);
  d.U = linalg::complement(d.S, d.V, G);
  linalg::Matrix sum(9, d.CV.cols() + d.V.cols());
  sum << d.CV, d.V;
  d.R = linalg::complement(sum, tq_basis(zeta.x.e), G);
  d.H.resize(9, d.R.cols() + d.T.cols());
  d.H << d.R, d.T;
  return d;
}

/// 𝒜•(x) as a 3x6 matrix: the vertical part (at C = I) of the lift (eta, de, 0).
inline Mat36 gnc_matrix(const GncDecomposition& d, const BasePoint& x) {
  const Eigen::Matrix<double, 6, 5> B = base_tangent_basis(x);
  Eigen::Matrix<double, 3, 5> Y;
  for (int j = 0; j < 5; ++j) {
    Vec9 v = Vec9::Zero();
    v.head<6>() = B.col(j);
    Y.col(j) = d.split(v).second.tail<3>();
  }
  return Y * B.transpose();
}

}  // namespace detail

/// The generalized nonholonomic connection 𝒜• of (dist, metric) as a
/// ConnectionForm; each evaluation rebuilds the decomposition at zeta.
inline ConnectionForm gnc_connection(const VariationalDistribution& dist, const KineticMetric& metric) {
  return ConnectionForm(
      [dist, metric](const ReducedState& zeta) {
        return detail::gnc_matrix(detail::decompose(dist, metric, zeta), zeta.x);
      },
      "gnc:" + dist.name, dist.depends_on_momenta);
}

/// Builds S, T, U, R, H• and the connection 𝒜• whose horizontal space is H•.
/// Dependent generators are dropped and counted in dropped_generators.
inline std::pair<GncDecomposition, ConnectionForm> build_gnc(const VariationalDistribution& dist,
                                                             const KineticMetric& metric,
                                                             const ReducedState& zeta) {
  auto d = detail::decompose(dist, metric, zeta);
  if (d.H.cols() + d.V.cols() != 8) {
    throw Error(ErrorKind::RankDeficiency, "H• ⊕ V has dimension " + std::to_string(d.H.cols() + d.V.cols()));
  }
  return {std::move(d), gnc_connection(dist, metric)};
}

/// Horizontal and vertical reduced variations.
struct ReducedVariations {
  Eigen::Matrix<double, 6, Eigen::Dynamic> hor;  // Euclidean-orthonormal, in T X
  Eigen::Matrix<double, 3, Eigen::Dynamic> ver;  // Euclidean-orthonormal, in g
};

/// hor = π_*(C_V), ver = a•(C_V), both read off the decomposition at C = I.
inline ReducedVariations decompose_reduced_variations(const GncDecomposition& gnc) {
  const int n = static_cast<int>(gnc.CV.cols());
  linalg::Matrix hor(6, n), ver(3, n);
  for (int j = 0; j < n; ++j) {
    const Vec9 v = gnc.CV.col(j);
    hor.col(j) = v.head<6>();
    ver.col(j) = gnc.split(v).second.tail<3>();
  }
  ReducedVariations out;
  out.hor = linalg::orthonormalize(hor, 1e-8).columns;
  out.ver = linalg::orthonormalize(ver, 1e-8).columns;
  return out;
}

/// phi(x, dx) = (𝒜 - 𝒜•)(x) dx: the g-component, in the connection A, of the
/// A•-horizontal lift of dx.
inline Vec3 phi_map(const ConnectionForm& connA, const ConnectionForm& connGnc, const ReducedState& zeta,
                    const BaseTangent& dx) {
  return connA(zeta, dx) - connGnc(zeta, dx);
}

namespace detail {

/// Point at parameter t along the curve through x with velocity u: right
/// translation on SO(3), great circle on S^2.
inline BasePoint flow(const BasePoint& x, const BaseTangent& u, double t) {
  BasePoint out;
  out.R = exp_so3(t * u.eta) * x.R;
  const Vec3 ut = project_sphere_tangent(x.e, u.de);
  const double s = ut.norm();
  out.e = s > 0.0 ? Vec3(std::cos(t * s) * x.e + std::sin(t * s) * (ut / s)) : x.e;
  return out;
}

/// Extension of v along the curve: right-invariant in eta, projected in de.
inline BaseTangent extend(const BasePoint& y, const BaseTangent& v) {
  return {v.eta, project_sphere_tangent(y.e, v.de)};
}

}  // namespace detail

/// B̃(u, v) = d𝒜(u, v) − [𝒜u, 𝒜v]. d𝒜 is the connection's analytic exterior
/// derivative when supplied, otherwise central differences along the flows
/// of right-invariant / tangent-projected extensions of u and v.
inline Vec3 exterior_derivative(const ConnectionForm& conn, const BasePoint& x_in, const BaseTangent& u,
                                const BaseTangent& v, double step = 1e-5) {
  if (conn.is_trivial()) return Vec3::Zero();
  if (conn.exterior()) return conn.exterior()(x_in, u, v);
  const BasePoint x{x_in.R, x_in.e.normalized()};
  if (conn.zeta_dependent()) {
    throw Error(ErrorKind::StepFailure, "curvature of an l-connection is not defined here");
  }
  const double scale = std::max({1.0, u.vec().norm(), v.vec().norm()});
  const double h = step / scale;
  auto directional = [&](const BaseTangent& dir, const BaseTangent& arg) {
    const BasePoint xp = detail::flow(x, dir, h);
    const BasePoint xm = detail::flow(x, dir, -h);
    for (const BasePoint* y : {&xp, &xm}) {
      if (orthonormality_error(y->R) > 1e-9 || std::abs(y->e.norm() - 1.0) > 1e-9) {
        throw Error(ErrorKind::StepFailure, "finite-difference point left the manifold");
      }
    }
    return Vec3((conn(xp, detail::extend(xp, arg)) - conn(xm, detail::extend(xm, arg))) / (2.0 * h));
  };
  // [U, V] of right-invariant fields is −(a × b); the projected sphere fields commute at x.
  const BaseTangent bracket{-u.eta.cross(v.eta), Vec3::Zero()};
  return directional(u, v) - directional(v, u) - conn(x, bracket);
}

inline Vec3 reduced_curvature(const ConnectionForm& conn, const BasePoint& x, const BaseTangent& u,
                              const BaseTangent& v, double step = 1e-5) {
  if (conn.is_trivial()) return Vec3::Zero();
  return exterior_derivative(conn, x, u, v, step) - conn(x, u).cross(conn(x, v));
}

}  // namespace hdp
