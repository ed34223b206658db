#pragma once

// Central finite differences on the trivialized spaces. Rotations move by
// left multiplication with exp (right-trivialized gradients); sphere points
// move along great circles with the cotangent slot parallel transported.

#include <functional>

#include "hdp/state.hpp"

namespace hdp::fd {

inline constexpr double kStep = 1e-6;

/// Great-circle displacement of e by angle t along unit tangent u, and the
/// Levi-Civita transport of a tangent vector w along it.
inline Vec3 sphere_move(const Vec3& e, const Vec3& u, double t) { return std::cos(t) * e + std::sin(t) * u; }

inline Vec3 sphere_transport(const Vec3& e, const Vec3& u, const Vec3& w, double t) {
  const double wu = w.dot(u);
  return w - wu * u + wu * (std::cos(t) * u - std::sin(t) * e);
}

template <class F>
Vec3 gradient3(F&& f, const Vec3& v, double step = kStep) {
  const double h = step * (1.0 + v.norm());
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 p = v, m = v;
    p(i) += h;
    m(i) -= h;
    g(i) = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

/// Tangential gradient on T_e S^2 of a function of a covector sigma ⊥ e.
template <class F>
Vec3 tangent_gradient(F&& f, const Vec3& e, const Vec3& sigma, double step = kStep) {
  const double h = step * (1.0 + sigma.norm());
  Vec3 g = Vec3::Zero();
  for (const Vec3& t : sphere_tangent_basis(e)) {
    g += t * (f(Vec3(sigma + h * t)) - f(Vec3(sigma - h * t))) / (2.0 * h);
  }
  return g;
}

/// Right-trivialized gradient of f(R): d/dt f(exp(t E_i) R).
template <class F>
Vec3 rotation_gradient(F&& f, const Mat3& R, double step = kStep) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    const Vec3 E = Vec3::Unit(i);
    g(i) = (f(Mat3(exp_so3(step * E) * R)) - f(Mat3(exp_so3(-step * E) * R))) / (2.0 * step);
  }
  return g;
}

/// Covariant base gradient on S^2 of f(e, sigma): e moves along geodesics,
/// sigma is parallel transported.
template <class F>
Vec3 sphere_base_gradient(F&& f, const Vec3& e, const Vec3& sigma, double step = kStep) {
  Vec3 g = Vec3::Zero();
  for (const Vec3& t : sphere_tangent_basis(e)) {
    const double fp = f(sphere_move(e, t, step), sphere_transport(e, t, sigma, step));
    const double fm = f(sphere_move(e, t, -step), sphere_transport(e, t, sigma, -step));
    g += t * (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Plain ambient gradient in e (sigma held fixed), projected onto T_e S^2.
template <class F>
Vec3 sphere_flat_gradient(F&& f, const Vec3& e, const Vec3& sigma, double step = kStep) {
  Vec3 g = Vec3::Zero();
  for (const Vec3& t : sphere_tangent_basis(e)) {
    g += t * (f(Vec3(e + step * t), sigma) - f(Vec3(e - step * t), sigma)) / (2.0 * step);
  }
  return g;
}

}  // namespace hdp::fd
