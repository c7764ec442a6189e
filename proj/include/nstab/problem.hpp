#pragma once

#include "nstab/funcspec.hpp"

namespace nstab {

/// x'(t) - a(t) x'(g(t)) + b(t) x(h(t)) = f(t) for t >= t0,
/// x = phi and x' = psi on the history t < t0 (x(t0) = phi(t0)).
struct NDDEProblem {
  FuncExpr a = FuncExpr::constant(0.0);
  FuncExpr b = FuncExpr::constant(0.0);
  DelayFunc g = DelayFunc::none();
  DelayFunc h = DelayFunc::none();
  FuncExpr f = FuncExpr::constant(0.0);
  FuncExpr phi = FuncExpr::constant(0.0);
  FuncExpr psi = FuncExpr::constant(0.0);
  double t0 = 0.0;
};

/// x'(t) = r(t) x(t) (1 - (x(h(t)) - rho x'(g(t))) / K).
struct LogisticProblem {
  FuncExpr r = FuncExpr::constant(0.0);
  double K = 1.0;
  double rho = 0.0;
  DelayFunc g = DelayFunc::none();
  DelayFunc h = DelayFunc::none();
  FuncExpr phi = FuncExpr::constant(1.0);
  FuncExpr psi = FuncExpr::constant(0.0);
  double t0 = 0.0;
};

}  // namespace nstab
