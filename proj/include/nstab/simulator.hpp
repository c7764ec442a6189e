#pragma once

// Uniform-grid integration of neutral delay equations.
//
// Each step is a two-stage predictor-corrector (explicit Euler predictor,
// trapezoidal corrector, final re-evaluation). Every node keeps two
// derivative values: the left limit used as the end of the step that reaches
// the node, and the right limit that starts the next step. Derivative jumps
// propagated by the neutral term land on nodes whenever the lags are multiples
// of the step, and the two limits keep them from smearing across a step.
//
// History is read through cubic Hermite interpolation for x and linear
// interpolation for x'. When a delayed argument falls inside the current step
// (including g(t) = t) the derivative is found by fixed-point iteration, which
// contracts with factor at most sup a < 1 for the linear equation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "nstab/bounds.hpp"
#include "nstab/error.hpp"
#include "nstab/funcspec.hpp"
#include "nstab/problem.hpp"
#include "nstab/quadrature.hpp"

namespace nstab {

enum class TrajectoryStatus { complete, diverged, left_contraction_region, extinct };

inline const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::complete: return "complete";
    case TrajectoryStatus::diverged: return "diverged";
    case TrajectoryStatus::left_contraction_region: return "left contraction region";
    case TrajectoryStatus::extinct: return "extinct";
  }
  return "?";
}

namespace detail {
inline double hermite(double theta, double h, double x0, double d0, double x1, double d1) {
  const double t2 = theta * theta, t3 = t2 * theta;
  return (2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + theta) * h * d0 + (-2 * t3 + 3 * t2) * x1 +
         (t3 - t2) * h * d1;
}

inline constexpr double kSnap = 1e-9;  // in units of the step
}  // namespace detail

/// Numerical solution on the grid t0 + k dt.
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> x;
  std::vector<double> dx;       // right limits of x' at the nodes
  std::vector<double> dx_left;  // left limits of x' at the nodes (dx_left[0] = psi(t0))
  FuncExpr phi = FuncExpr::constant(0.0);
  FuncExpr psi = FuncExpr::constant(0.0);
  TrajectoryStatus status = TrajectoryStatus::complete;
  std::optional<double> stopped_at;

  std::size_t size() const { return x.size(); }
  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  double t_end() const { return x.empty() ? t0 : time(x.size() - 1); }
  bool ok() const { return status == TrajectoryStatus::complete; }

  /// x(t): history before t0, Hermite interpolation on the grid.
  double x_at(double t) const {
    if (t < t0) return phi(t);
    const double u = (t - t0) / dt;
    const double k = std::round(u);
    if (std::abs(u - k) < detail::kSnap) return x.at(static_cast<std::size_t>(k));
    const auto i = static_cast<std::size_t>(std::floor(u));
    if (i + 1 >= x.size()) throw std::out_of_range(fmt::format("t = {} past trajectory end {}", t, t_end()));
    return detail::hermite(u - static_cast<double>(i), dt, x[i], dx[i], x[i + 1], dx_left[i + 1]);
  }

  /// x'(t): history before t0, right limits at nodes, linear in between.
  double dx_at(double t) const {
    if (t < t0) return psi(t);
    const double u = (t - t0) / dt;
    const double k = std::round(u);
    if (std::abs(u - k) < detail::kSnap) return dx.at(static_cast<std::size_t>(k));
    const auto i = static_cast<std::size_t>(std::floor(u));
    if (i + 1 >= x.size()) throw std::out_of_range(fmt::format("t = {} past trajectory end {}", t, t_end()));
    const double theta = u - static_cast<double>(i);
    return (1.0 - theta) * dx[i] + theta * dx_left[i + 1];
  }
};

struct IntegrateOptions {
  double blowup = 1e12;          // |x| beyond this stops the run as diverged
  double fixed_point_tol = 1e-12;
  int fixed_point_max_iter = 100;
};

namespace detail {

enum class Side { left, right };

// Grid under construction plus the node currently being resolved.
class Grid {
 public:
  Grid(double t0, double dt, std::size_t nodes, FuncExpr phi, FuncExpr psi)
      : t0_(t0), dt_(dt), phi_(std::move(phi)), psi_(std::move(psi)) {
    x_.reserve(nodes);
    dl_.reserve(nodes);
    dr_.reserve(nodes);
  }

  // Lookups used while resolving node `m` on the given side; the unknown
  // derivative at that node is `trial`.
  struct View {
    const Grid* grid;
    std::size_t m;
    Side side;
    double trial;
    mutable bool touched = false;

    double x(double s) const { return grid->x_lookup(*this, s); }
    double dx(double s) const { return grid->dx_lookup(*this, s); }
  };

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double time(std::size_t k) const { return t0_ + dt_ * static_cast<double>(k); }

  std::vector<double> x_, dl_, dr_;

  const FuncExpr& phi() const { return phi_; }
  const FuncExpr& psi() const { return psi_; }

 private:
  double t0_, dt_;
  FuncExpr phi_, psi_;

  double node_x(std::size_t k, Side side) const {
    if (k == 0 && side == Side::left) return phi_(t0_);
    return x_[k];
  }

  double node_dx(const View& v, std::size_t k, Side side) const {
    if (k == 0 && side == Side::left) return psi_(t0_);
    if (k == v.m && side == v.side) {
      v.touched = true;
      return v.trial;
    }
    return side == Side::left ? dl_[k] : dr_[k];
  }

  template <class NodeFn, class SegmentFn, class HistoryFn>
  double lookup(const View& v, double s, NodeFn node, SegmentFn segment, HistoryFn history) const {
    const double u = (s - t0_) / dt_;
    const double k = std::round(u);
    if (std::abs(u - k) < kSnap) {
      if (k < 0) return history(s);
      const auto kk = static_cast<std::size_t>(k);
      if (kk > v.m) throw ConsistencyError(fmt::format("lookup at {} ahead of the integration front {}", s, time(v.m)));
      return node(kk, v.side);
    }
    if (s < t0_) return history(s);
    const auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= v.m) throw ConsistencyError(fmt::format("lookup at {} ahead of the integration front {}", s, time(v.m)));
    return segment(i, u - static_cast<double>(i));
  }

  double x_lookup(const View& v, double s) const {
    return lookup(
        v, s, [&](std::size_t k, Side side) { return node_x(k, side); },
        [&](std::size_t i, double theta) {
          return hermite(theta, dt_, node_x(i, Side::right), node_dx(v, i, Side::right), node_x(i + 1, Side::left),
                         node_dx(v, i + 1, Side::left));
        },
        [&](double s) { return phi_(s); });
  }

  double dx_lookup(const View& v, double s) const {
    return lookup(
        v, s, [&](std::size_t k, Side side) { return node_dx(v, k, side); },
        [&](std::size_t i, double theta) {
          return (1.0 - theta) * node_dx(v, i, Side::right) + theta * node_dx(v, i + 1, Side::left);
        },
        [&](double s) { return psi_(s); });
  }
};

struct Resolved {
  double value = 0.0;
  bool converged = true;
};

// Solves d = rhs(t, view(trial = d)) by fixed-point iteration.
template <class Rhs>
Resolved resolve_derivative(const Rhs& rhs, const Grid& grid, std::size_t m, Side side, double guess,
                            const IntegrateOptions& opts) {
  const double t = grid.time(m);
  double d = guess;
  for (int it = 0; it < opts.fixed_point_max_iter; ++it) {
    Grid::View view{&grid, m, side, d};
    const double next = rhs(t, view);
    if (!std::isfinite(next)) return {next, false};
    if (!view.touched) return {next, true};
    if (std::abs(next - d) < opts.fixed_point_tol * std::max(1.0, std::abs(next))) return {next, true};
    d = next;
  }
  return {d, false};
}

}  // namespace detail

/// Stops a run early; returns the status to record, or nullopt to continue.
using StopRule = std::optional<TrajectoryStatus> (*)(double x);

/// Integrates x'(t) = rhs(t, view) from x(t0) = x0 over `steps` steps, where
/// `view.x(s)` and `view.dx(s)` read the solution (or history) at s <= t.
/// A fixed-point failure records `contraction_failure` as the status, or throws
/// ConsistencyError when that is `complete`.
template <class Rhs>
Trajectory integrate_neutral(const Rhs& rhs, double t0, double dt, std::size_t steps, double x0, const FuncExpr& phi,
                             const FuncExpr& psi, const IntegrateOptions& opts = {},
                             TrajectoryStatus contraction_failure = TrajectoryStatus::complete,
                             StopRule stop = nullptr) {
  using detail::Side;
  detail::Grid grid(t0, dt, steps + 1, phi, psi);
  Trajectory out;
  out.t0 = t0;
  out.dt = dt;
  out.phi = phi;
  out.psi = psi;

  auto fail = [&](std::size_t m, TrajectoryStatus status) {
    if (status == TrajectoryStatus::complete)
      throw ConsistencyError(fmt::format("derivative fixed point failed to converge at t = {}", grid.time(m)));
    out.status = status;
    out.stopped_at = grid.time(m);
  };

  grid.x_.push_back(x0);
  grid.dl_.push_back(psi(t0));
  grid.dr_.push_back(0.0);
  auto r0 = detail::resolve_derivative(rhs, grid, 0, Side::right, psi(t0), opts);
  if (!r0.converged) {
    fail(0, contraction_failure);
  } else {
    grid.dr_[0] = r0.value;
    for (std::size_t n = 0; n < steps; ++n) {
      const std::size_t m = n + 1;
      const double xn = grid.x_[n];
      const double dn = grid.dr_[n];
      grid.x_.push_back(xn + dt * dn);
      grid.dl_.push_back(dn);
      grid.dr_.push_back(dn);

      auto pred = detail::resolve_derivative(rhs, grid, m, Side::left, dn, opts);
      if (!pred.converged) {
        fail(m, contraction_failure);
        break;
      }
      grid.x_[m] = xn + 0.5 * dt * (dn + pred.value);
      auto corr = detail::resolve_derivative(rhs, grid, m, Side::left, pred.value, opts);
      if (!corr.converged) {
        fail(m, contraction_failure);
        break;
      }
      grid.dl_[m] = corr.value;
      auto right = detail::resolve_derivative(rhs, grid, m, Side::right, corr.value, opts);
      if (!right.converged) {
        fail(m, contraction_failure);
        break;
      }
      grid.dr_[m] = right.value;

      const double xm = grid.x_[m];
      if (!std::isfinite(xm) || std::abs(xm) > opts.blowup) {
        out.status = TrajectoryStatus::diverged;
        out.stopped_at = grid.time(m);
        break;
      }
      if (stop) {
        if (auto s = stop(xm)) {
          out.status = *s;
          out.stopped_at = grid.time(m);
          break;
        }
      }
    }
  }

  // A failed node is dropped; the trajectory ends at the last good one.
  std::size_t keep = grid.x_.size();
  if (out.status != TrajectoryStatus::complete && keep > 1) --keep;
  grid.x_.resize(keep);
  grid.dl_.resize(keep);
  grid.dr_.resize(keep);
  out.x = std::move(grid.x_);
  out.dx_left = std::move(grid.dl_);
  out.dx = std::move(grid.dr_);
  return out;
}

/// Upper bound of a lag over [lo, hi], declared or extracted.
inline double lag_upper_bound(const DelayFunc& d, Horizon horizon) {
  if (d.declared_max) return *d.declared_max;
  return resolve_lag(d, horizon, 4000).max;
}

/// Throws std::invalid_argument unless dt <= min(positive lag maxima) / 4.
inline void check_step(const NDDEProblem& p, double T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(T > p.t0)) throw std::invalid_argument(fmt::format("T = {} must exceed t0 = {}", T, p.t0));
  const Horizon hz{p.t0, T};
  for (double lag : {lag_upper_bound(p.g, hz), lag_upper_bound(p.h, hz)}) {
    if (lag > 0.0 && dt > lag / 4.0 * (1.0 + 1e-12))
      throw std::invalid_argument(fmt::format("dt = {} exceeds a quarter of the lag bound {}", dt, lag));
  }
}

inline std::size_t step_count(double t0, double T, double dt) {
  return static_cast<std::size_t>(std::llround((T - t0) / dt));
}

namespace detail {
inline Trajectory integrate_linear(const NDDEProblem& p, double T, double dt, double x0, const IntegrateOptions& opts) {
  check_step(p, T, dt);
  auto rhs = [&p](double t, const Grid::View& v) {
    const double at = p.a(t);
    double d = -p.b(t) * v.x(p.h(t)) + p.f(t);
    if (at != 0.0) d += at * v.dx(p.g(t));
    return d;
  };
  return integrate_neutral(rhs, p.t0, dt, step_count(p.t0, T, dt), x0, p.phi, p.psi, opts);
}
}  // namespace detail

/// Solves the neutral problem on [t0, T] with x(t0) = phi(t0).
inline Trajectory integrate(const NDDEProblem& p, double T, double dt, const IntegrateOptions& opts = {}) {
  return detail::integrate_linear(p, T, dt, p.phi(p.t0), opts);
}

/// X(., s): unit value at s, zero value and derivative before s, no forcing.
inline Trajectory fundamental(const NDDEProblem& p, double s, double T, double dt, const IntegrateOptions& opts = {}) {
  if (s < p.t0) throw std::invalid_argument(fmt::format("s = {} precedes t0 = {}", s, p.t0));
  NDDEProblem q = p;
  q.t0 = s;
  q.f = q.phi = q.psi = FuncExpr::constant(0.0);
  return detail::integrate_linear(q, T, dt, 1.0, opts);
}

// Bounded pseudo-random history c0 + c1 sin(w t + p) with |c0| + |c1| <= 1 and
// its exact derivative. Only raw generator output is used, so runs are
// reproducible across standard libraries.
inline std::pair<FuncExpr, FuncExpr> random_history(std::mt19937_64& rng) {
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double c0 = 2.0 * unit() - 1.0;
  const double c1 = (1.0 - std::abs(c0)) * (2.0 * unit() - 1.0);
  const double w = 0.2 + 2.8 * unit();
  const double p = 6.283185307179586 * unit();
  FuncExpr phi = parse(fmt::format("{}+{}*sin({}*t+{})", c0, c1, w, p));
  FuncExpr psi = parse(fmt::format("{}*cos({}*t+{})", c1 * w, w, p));
  return {phi, psi};
}

enum class DecayVerdict { decaying, nondecaying, inconclusive };

inline const char* to_string(DecayVerdict v) {
  switch (v) {
    case DecayVerdict::decaying: return "decaying";
    case DecayVerdict::nondecaying: return "nondecaying";
    case DecayVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct DecayOptions {
  double tail_fraction = 0.5;
  double drop_ratio = 0.01;  // envelope(T) below this fraction of envelope(tail start) => decaying
  double window = 0.0;       // envelope window; 0 = a tenth of the tail
  double center = 0.0;       // equilibrium the deviation is measured from
};

struct DecayEstimate {
  double gamma_est = 0.0;
  double M_est = 0.0;
  double fit_residual = 0.0;
  DecayVerdict verdict = DecayVerdict::inconclusive;
  double envelope_start = 0.0;
  double envelope_end = 0.0;
  DecayOptions options;
};

/// Fits log of the sliding-max envelope of |x - center| over the trailing
/// part of the run: envelope(t) = max |x - center| over [t - window, t].
inline DecayEstimate estimate_decay(const Trajectory& tr, const DecayOptions& opts = {}) {
  if (!tr.ok()) throw std::invalid_argument(fmt::format("trajectory is {}", to_string(tr.status)));
  if (!(opts.tail_fraction > 0.0 && opts.tail_fraction < 1.0))
    throw std::invalid_argument("tail_fraction must lie in (0, 1)");
  if (tr.size() < 8) throw std::invalid_argument("trajectory too short for a decay estimate");

  DecayEstimate est;
  est.options = opts;
  const std::size_t n = tr.size();
  const double span = tr.t_end() - tr.t0;
  const double tail = opts.tail_fraction * span;
  const double window = opts.window > 0.0 ? opts.window : tail / 10.0;
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window / tr.dt)));
  const std::size_t start = n - 1 - std::min(n - 1, static_cast<std::size_t>(std::llround(tail / tr.dt)));

  // sliding maximum over the last w + 1 samples
  std::vector<double> env(n, 0.0);
  std::deque<std::size_t> q;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = std::abs(tr.x[k] - opts.center);
    while (!q.empty() && std::abs(tr.x[q.back()] - opts.center) <= v) q.pop_back();
    q.push_back(k);
    while (q.front() + w < k) q.pop_front();
    env[k] = std::abs(tr.x[q.front()] - opts.center);
  }

  est.envelope_start = env[start];
  est.envelope_end = env[n - 1];
  bool all_zero = true;
  for (std::size_t k = start; k < n; ++k) all_zero = all_zero && env[k] == 0.0;
  if (all_zero) {
    est.gamma_est = std::numeric_limits<double>::infinity();
    est.verdict = DecayVerdict::decaying;
    return est;
  }

  constexpr double floor = 1e-300;
  double st = 0, sy = 0, stt = 0, sty = 0;
  const auto cnt = static_cast<double>(n - start);
  for (std::size_t k = start; k < n; ++k) {
    const double t = tr.time(k) - tr.t0;
    const double y = std::log(std::max(env[k], floor));
    st += t, sy += y, stt += t * t, sty += t * y;
  }
  const double slope = (cnt * sty - st * sy) / (cnt * stt - st * st);
  const double intercept = (sy - slope * st) / cnt;
  double ss = 0;
  for (std::size_t k = start; k < n; ++k) {
    const double t = tr.time(k) - tr.t0;
    const double r = std::log(std::max(env[k], floor)) - (intercept + slope * t);
    ss += r * r;
  }
  est.gamma_est = -slope;
  est.M_est = std::exp(intercept);
  est.fit_residual = std::sqrt(ss / cnt);

  if (est.gamma_est > 0.0 && est.envelope_end < opts.drop_ratio * est.envelope_start)
    est.verdict = DecayVerdict::decaying;
  else if (est.envelope_end >= est.envelope_start)
    est.verdict = DecayVerdict::nondecaying;
  else
    est.verdict = DecayVerdict::inconclusive;
  return est;
}

/// Diagnostics for x'(t) + B(t) x(t - tau0) = 0 and its fundamental function X0.
struct PositivityReport {
  double window_integral_max = 0.0;  // max over t of the integral of B over [t - tau0, t]
  bool window_condition = false;       // that max is <= 1/e
  bool positivity_applicable = false;  // window condition and B >= b0 > 0 on the grid
  double min_X0 = 0.0;               // over t >= s on the s-grid
  double max_integral = 0.0;         // max over t of the integral of X0(t, s) B(s) over [t0 + tau0, t]
  std::size_t fundamentals = 0;
  DecayEstimate decay;               // of X0(., t0)
  std::vector<std::string> notes;
};

struct PositivityOptions {
  std::size_t s_stride = 20;  // spacing of the s-grid in steps
  DecayOptions decay;
};

inline PositivityReport check_positivity(const FuncExpr& B, double tau0, double t0, double T, double dt,
                                    const PositivityOptions& opts = {}) {
  if (!(tau0 >= 0.0)) throw std::invalid_argument("tau0 must be nonnegative");
  PositivityReport rep;

  NDDEProblem eq;
  eq.b = B;
  eq.h = DelayFunc::constant(tau0);
  eq.t0 = t0;

  const double b_lo = sampled_range(B, {t0, T}, step_count(t0, T, dt) + 1).lo;
  if (tau0 > 0.0) {
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(tau0 / dt)));
    rep.window_integral_max = max_window_integral(B, tau0, t0, T, panels).value;
  }
  rep.window_condition = rep.window_integral_max <= 1.0 / std::numbers::e + 1e-12;
  rep.positivity_applicable = rep.window_condition && b_lo > 0.0;
  if (!rep.window_condition)
    rep.notes.push_back(fmt::format("positivity test inapplicable: window integral {} exceeds 1/e", rep.window_integral_max));
  if (!(b_lo > 0.0)) rep.notes.push_back(fmt::format("positivity test inapplicable: min B = {} is not positive", b_lo));

  // s-grid: t0, then t0 + tau0 + k ds
  const double ds = dt * static_cast<double>(opts.s_stride);
  std::vector<double> s_grid{t0};
  for (double s = t0 + tau0; s <= T - ds; s += ds) s_grid.push_back(s);
  if (tau0 == 0.0) s_grid.erase(s_grid.begin());

  std::vector<Trajectory> X;
  X.reserve(s_grid.size());
  for (double s : s_grid) X.push_back(fundamental(eq, s, T, dt));
  rep.fundamentals = X.size();

  rep.min_X0 = HUGE_VAL;
  for (const auto& tr : X)
    for (double v : tr.x) rep.min_X0 = std::min(rep.min_X0, v);

  const std::size_t first = tau0 == 0.0 ? 0 : 1;
  rep.max_integral = 0.0;
  for (std::size_t it = first + 1; it < s_grid.size(); ++it) {
    const double t = s_grid[it];
    std::vector<double> y;
    for (std::size_t is = first; is <= it; ++is) y.push_back(X[is].x_at(t) * B(s_grid[is]));
    rep.max_integral = std::max(rep.max_integral, trapezoid(y, ds));
  }

  rep.decay = estimate_decay(X.front(), opts.decay);
  return rep;
}

}  // namespace nstab
