#pragma once

// Kinematic constraints as seen by the step solvers: every constraint
// contributes linear rows A·rate = b on the stacked state rate. Order-1
// constraints also expose their state residual (and optionally a projection
// back onto the constraint set); order-2 constraints are residuals of the
// rate itself.

#include <functional>
#include <string>

#include "hdp/linalg.hpp"

namespace hdp {

struct RateRows {
  linalg::Matrix A;
  linalg::Vector b;
};

template <class State>
struct KinematicConstraint {
  std::string name;
  int order = 1;
  std::function<linalg::Vector(const State&)> residual;  // order 1
  std::function<RateRows(const State&)> rate_rows;
  std::function<State(const State&)> project;  // optional, order 1

  /// Order 1: |residual(s)|. Order 2: |A·rate − b|.
  template <class Rate>
  linalg::Vector evaluate(const State& s, const Rate& rate) const {
    if (order == 1) return residual(s);
    const RateRows r = rate_rows(s);
    return r.A * rate.vec() - r.b;
  }
};

}  // namespace hdp
