#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include <fmt/format.h>

#include "nstab/bounds.hpp"
#include "nstab/criteria.hpp"
#include "nstab/error.hpp"
#include "nstab/problem.hpp"
#include "nstab/simulator.hpp"

namespace nstab {

inline void validate(const LogisticProblem& p) {
  if (!(p.K > 0.0)) throw BoundsError(fmt::format("carrying capacity must be positive (K = {})", p.K));
  if (!(p.rho >= 0.0)) throw BoundsError(fmt::format("rho must be nonnegative (rho = {})", p.rho));
}

/// Rate and lag bounds, with R0 rho < 1 enforced.
inline LogisticBounds logistic_bounds(const LogisticProblem& p, Horizon horizon, std::size_t n_samples,
                                      bool force_sampling = false) {
  validate(p);
  const FunctionRange r = conservative(function_range(p.r, horizon, n_samples, force_sampling));
  const LagBounds g = resolve_lag(p.g, horizon, n_samples, force_sampling);
  const LagBounds h = resolve_lag(p.h, horizon, n_samples, force_sampling);
  if (!(r.lo > 0.0)) throw BoundsError(fmt::format("growth rate must be positive (r0 = {})", r.lo));
  if (!(r.hi * p.rho < 1.0))
    throw BoundsError(fmt::format("neutral coefficient not a contraction (R0 rho = {} >= 1)", r.hi * p.rho));
  return {r.lo, r.hi, p.rho, h.max, g.max, h.min};
}

/// Linearization about K: z' = rho r(t) z'(g(t)) - r(t) z(h(t)), z = x - K.
inline NDDEProblem linearize(const LogisticProblem& p) {
  validate(p);
  NDDEProblem q;
  q.a = FuncExpr::constant(p.rho) * p.r;
  q.b = p.r;
  q.g = p.g;
  q.h = p.h;
  q.phi = p.phi - FuncExpr::constant(p.K);
  q.psi = p.psi;
  q.t0 = p.t0;
  return q;
}

/// Solves x' = r x (1 - (x(h) - rho x'(g)) / K). The run stops with
/// `left_contraction_region` if the implicit derivative cannot be resolved and
/// with `extinct` once x reaches 0.
inline Trajectory integrate_logistic(const LogisticProblem& p, double T, double dt, const IntegrateOptions& opts = {}) {
  validate(p);
  NDDEProblem shape;
  shape.g = p.g;
  shape.h = p.h;
  shape.t0 = p.t0;
  check_step(shape, T, dt);

  const double inv_k = 1.0 / p.K;
  auto rhs = [&p, inv_k](double t, const detail::Grid::View& v) {
    double inner = v.x(p.h(t));
    if (p.rho != 0.0) inner -= p.rho * v.dx(p.g(t));
    return p.r(t) * v.x(t) * (1.0 - inner * inv_k);
  };
  StopRule extinct = [](double x) -> std::optional<TrajectoryStatus> {
    if (x <= 0.0) return TrajectoryStatus::extinct;
    return std::nullopt;
  };
  return integrate_neutral(rhs, p.t0, dt, step_count(p.t0, T, dt), p.phi(p.t0), p.phi, p.psi, opts,
                           TrajectoryStatus::left_contraction_region, extinct);
}

/// Local stability verdicts for the equilibrium K: the printed logistic tests
/// (reported, not certifying), the linearization-derived tests, the
/// autonomous-model tests when r is constant and both lags are the same
/// constant, and every applicable test on the linearized equation.
inline CheckReport check_local_stability(const LogisticProblem& p, const CheckOptions& opts = {}) {
  const LogisticBounds lb = logistic_bounds(p, default_horizon(p.t0, opts), opts.n_samples, opts.force_sampling);
  CheckReport report;
  auto& out = report.verdicts;

  for (LogisticMode mode : {LogisticMode::as_stated, LogisticMode::derived}) {
    auto [a, b] = eval_logistic_thm(lb, mode);
    out.push_back(std::move(a));
    out.push_back(std::move(b));
  }

  const bool autonomous = p.r.is_constant() && p.g.lag.is_constant() && p.h.lag.is_constant() && lb.tau == lb.sigma;
  if (autonomous) {
    out.push_back(eval_logistic_cor(lb.r_min, p.rho, lb.tau));
    out.push_back(eval_yu_prop1(lb.r_min, p.rho, lb.tau));
  } else {
    out.push_back(skipped_verdict(CriterionId::LOG_COR, "requires constant r and equal constant delays"));
    out.push_back(skipped_verdict(CriterionId::YU_PROP1, "requires constant r and equal constant delays"));
  }

  CheckReport lin = check_all(linearize(p), opts);
  report.bounds = lin.bounds;
  for (auto& v : lin.verdicts) out.push_back(std::move(v));
  report.certified = any_certifies(out);
  return report;
}

/// Whether the run ends within `tol * K` of K.
inline bool converges_to_equilibrium(const LogisticProblem& p, double T, double dt, double tol) {
  const Trajectory tr = integrate_logistic(p, T, dt);
  return tr.ok() && std::abs(tr.x.back() - p.K) <= tol * p.K;
}

/// Empirical basin probe: the largest constant offset phi = K (1 + eps), from
/// the given list, whose run converges to K. Not a proof of anything.
inline std::optional<double> largest_converging_offset(LogisticProblem p, std::span<const double> offsets, double T,
                                                       double dt, double tol = 0.01) {
  std::optional<double> best;
  for (double eps : offsets) {
    p.phi = FuncExpr::constant(p.K * (1.0 + eps));
    p.psi = FuncExpr::constant(0.0);
    if (converges_to_equilibrium(p, T, dt, tol) && (!best || std::abs(eps) > std::abs(*best))) best = eps;
  }
  return best;
}

}  // namespace nstab
