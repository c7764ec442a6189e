#pragma once

// Exact method-of-steps solution of
//   x'(t) = 0.5 x'(t - 1) - b x(t - 1),  x(t) = t, x'(t) = 1 for t <= 0.
// On [k, k + 1] the solution is a polynomial P_k(t - k), obtained from P_{k-1}
// by one integration.

#include <cmath>
#include <cstddef>
#include <vector>

#include "nstab/funcspec.hpp"
#include "nstab/problem.hpp"

namespace mos {

using Poly = std::vector<double>;  // coefficients in u = t - k, lowest first

inline double value(const Poly& p, double u) {
  double v = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) v = v * u + p[i];
  return v;
}

inline Poly derivative(const Poly& p) {
  Poly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(static_cast<double>(i) * p[i]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

struct Piecewise {
  std::vector<Poly> pieces;  // pieces[k] covers [k, k + 1]

  double operator()(double t) const {
    if (t <= 0.0) return t;
    auto k = static_cast<std::size_t>(std::floor(t));
    if (k >= pieces.size()) k = pieces.size() - 1;
    return value(pieces[k], t - static_cast<double>(k));
  }
};

inline Piecewise solve(std::size_t intervals, double b = 0.5) {
  Piecewise out;
  Poly prev{-1.0, 1.0};  // history on [-1, 0]: t = u - 1
  for (std::size_t k = 0; k < intervals; ++k) {
    const Poly dprev = derivative(prev);
    Poly rhs(std::max(prev.size(), dprev.size()), 0.0);
    for (std::size_t i = 0; i < dprev.size(); ++i) rhs[i] += 0.5 * dprev[i];
    for (std::size_t i = 0; i < prev.size(); ++i) rhs[i] -= b * prev[i];
    Poly next{value(prev, 1.0)};
    for (std::size_t i = 0; i < rhs.size(); ++i) next.push_back(rhs[i] / static_cast<double>(i + 1));
    out.pieces.push_back(next);
    prev = next;
  }
  return out;
}

inline nstab::NDDEProblem neutral_problem(double b = 0.5) {
  nstab::NDDEProblem p;
  p.a = nstab::FuncExpr::constant(0.5);
  p.b = nstab::FuncExpr::constant(b);
  p.g = nstab::DelayFunc::constant(1.0);
  p.h = nstab::DelayFunc::constant(1.0);
  p.phi = nstab::FuncExpr::time();
  p.psi = nstab::FuncExpr::constant(1.0);
  return p;
}

}  // namespace mos
