#pragma once

// Physical parameters of the ball-on-ball system and the Lyapunov function
// V(R, e, p) = ½ pᵀ Φ(R, e) p + v(R, e) with its prescribed decay rate.

#include <functional>
#include <string>

#include "hdp/errors.hpp"
#include "hdp/state.hpp"

namespace hdp {

struct BallParams {
  double r1 = 1.0;
  double r2 = 0.5;
  double I1 = 1.0;
  double I2 = 0.1;
  double m2 = 1.0;
  double g = 9.81;

  double r12() const { return r2 / (r1 + r2); }
  double k() const { return 1.0 / (r1 + r2); }

  void validate() const {
    if (!(r1 > r2 && r2 > 0.0)) throw Error(ErrorKind::ConfigError, "ball radii must satisfy r1 > r2 > 0");
    if (!(I1 > 0.0 && I2 > 0.0 && m2 > 0.0)) throw Error(ErrorKind::ConfigError, "I1, I2, m2 must be positive");
    if (!(g >= 0.0)) throw Error(ErrorKind::ConfigError, "g must be non-negative");
  }
};


/// Momenta are stacked as (pi, sigma, gamma) ∈ R^9; Φ acts on that stack.
struct LyapunovSpec {
  std::function<Mat9(const BasePoint&)> phi;
  std::function<double(const BasePoint&)> v;
  // Right-trivialized gradient in R and ambient gradient in e.
  std::function<BaseCovector(const BasePoint&)> dv;
  // True when Φ does not depend on (R, e).
  bool phi_constant = true;
  std::function<double(const FullState&)> mu_rate;

  double value(const FullState& s) const {
    const Vec9 p = s.momenta();
    return 0.5 * p.dot(phi(s.base()) * p) + v(s.base());
  }
};

/// Φ = I, v = m₂g(1 − e·z), μ_rate = c‖p‖².
inline LyapunovSpec default_lyapunov(const BallParams& bp, double c = 0.1) {
  LyapunovSpec l;
  const double w = bp.m2 * bp.g;
  l.phi = [](const BasePoint&) { return Mat9::Identity().eval(); };
  l.v = [w](const BasePoint& x) { return w * (1.0 - x.e.dot(kUp)); };
  l.dv = [w](const BasePoint&) { return BaseCovector{Vec3::Zero(), Vec3(-w * kUp)}; };
  l.mu_rate = [c](const FullState& s) { return c * s.momenta().squaredNorm(); };
  return l;
}

}  // namespace hdp
