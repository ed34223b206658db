#pragma once

// Small dense helpers: metric Gram-Schmidt with pivoting, subspace
// intersections/complements, and minimum-norm least squares.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace hdp::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDropTol = 1e-10;

struct Basis {
  Matrix columns;  // G-orthonormal
  int dropped = 0;  // generators found dependent within the drop tolerance
};

/// G-orthonormal basis of span(cols). At each step the remaining candidate
/// with the largest G-norm is taken; candidates whose remaining norm falls
/// below drop_tol * (largest initial norm) are dropped.
inline Basis orthonormalize(const Matrix& cols, const Matrix& G, double drop_tol = kDropTol) {
  const int n = static_cast<int>(cols.rows());
  Matrix work = cols;
  std::vector<bool> used(static_cast<std::size_t>(cols.cols()), false);
  double ref = 0.0;
  for (int j = 0; j < cols.cols(); ++j) {
    ref = std::max(ref, std::sqrt(std::max(0.0, cols.col(j).dot(G * cols.col(j)))));
  }
  Basis out;
  out.columns.resize(n, 0);
  if (ref == 0.0) {
    out.dropped = static_cast<int>(cols.cols());
    return out;
  }
  for (int step = 0; step < cols.cols(); ++step) {
    int best = -1;
    double best_norm = -1.0;
    for (int j = 0; j < work.cols(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double nrm = std::sqrt(std::max(0.0, work.col(j).dot(G * work.col(j))));
      if (nrm > best_norm) {
        best_norm = nrm;
        best = j;
      }
    }
    if (best < 0 || best_norm <= drop_tol * ref) break;
    used[static_cast<std::size_t>(best)] = true;
    Vector q = work.col(best) / best_norm;
    // second pass against the accepted columns for stability
    for (int k = 0; k < out.columns.cols(); ++k) q -= out.columns.col(k) * out.columns.col(k).dot(G * q);
    q /= std::sqrt(q.dot(G * q));
    out.columns.conservativeResize(n, out.columns.cols() + 1);
    out.columns.col(out.columns.cols() - 1) = q;
    for (int j = 0; j < work.cols(); ++j) {
      if (!used[static_cast<std::size_t>(j)]) work.col(j) -= q * q.dot(G * work.col(j));
    }
  }
  out.dropped = static_cast<int>(cols.cols() - out.columns.cols());
  return out;
}

inline Basis orthonormalize(const Matrix& cols, double drop_tol = kDropTol) {
  return orthonormalize(cols, Matrix::Identity(cols.rows(), cols.rows()), drop_tol);
}

/// Orthonormal basis of the null space of A (columns), via SVD.
inline Matrix null_space(const Matrix& A, double rel_tol = 1e-10) {
  const int n = static_cast<int>(A.cols());
  if (A.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * std::max(1.0, smax)) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

/// Numerical rank of A with the same relative threshold as null_space.
inline int rank(const Matrix& A, double rel_tol = 1e-10) {
  if (A.size() == 0) return 0;
  return static_cast<int>(A.cols()) - static_cast<int>(null_space(A, rel_tol).cols());
}

/// G-orthogonal complement of span(sub) inside span(ambient).
inline Matrix complement(const Matrix& sub, const Matrix& ambient, const Matrix& G, double drop_tol = kDropTol) {
  Matrix work = ambient;
  double ref = 0.0;
  for (int j = 0; j < ambient.cols(); ++j) ref = std::max(ref, std::sqrt(ambient.col(j).dot(G * ambient.col(j))));
  if (sub.cols() > 0) {
    const Basis s = orthonormalize(sub, G, drop_tol);
    for (int k = 0; k < s.columns.cols(); ++k) {
      const Vector q = s.columns.col(k);
      for (int j = 0; j < work.cols(); ++j) work.col(j) -= q * q.dot(G * work.col(j));
    }
  }
  for (int j = 0; j < work.cols(); ++j) {
    if (std::sqrt(std::max(0.0, work.col(j).dot(G * work.col(j)))) <= 1e-8 * ref) work.col(j).setZero();
  }
  return orthonormalize(work, G, 1e-8).columns;
}

/// Basis of span(A) ∩ span(B), G-orthonormalized.
inline Matrix intersection(const Matrix& A, const Matrix& B, const Matrix& G, double rel_tol = 1e-10) {
  if (A.cols() == 0 || B.cols() == 0) return Matrix(A.rows(), 0);
  Matrix stacked(A.rows(), A.cols() + B.cols());
  stacked << A, -B;
  const Matrix N = null_space(stacked, rel_tol);
  const Matrix raw = A * N.topRows(A.cols());
  return orthonormalize(raw, G, 1e-8).columns;
}

struct LeastSquares {
  Vector x;
  double residual = 0.0;  // ||A x - b||_2
  int rank = 0;
  int rows = 0;
  int unknowns = 0;
};

/// Minimum-norm least-squares solution of A x = b.
inline LeastSquares min_norm_solve(const Matrix& A, const Vector& b, double rel_tol = 1e-12) {
  LeastSquares out;
  out.rows = static_cast<int>(A.rows());
  out.unknowns = static_cast<int>(A.cols());
  if (A.rows() == 0) {
    out.x = Vector::Zero(A.cols());
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  cod.setThreshold(rel_tol);
  out.x = cod.solve(b);
  out.rank = static_cast<int>(cod.rank());
  out.residual = (A * out.x - b).norm();
  return out;
}

}  // namespace hdp::linalg
