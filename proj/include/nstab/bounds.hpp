#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "nstab/error.hpp"
#include "nstab/funcspec.hpp"
#include "nstab/problem.hpp"

namespace nstab {

/// Scalar inputs of the stability criteria.
///   a_min <= a(t) <= a_max < 1,  0 < b_min <= b(t) <= b_max,
///   0 <= t - g(t) <= sigma,  h_lag_min <= t - h(t) <= tau.
struct ParamBounds {
  double a_min = 0.0;
  double a_max = 0.0;
  double b_min = 0.0;
  double b_max = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
  double h_lag_min = 0.0;
  bool exact = true;         // every bound came from a closed form
  double inflation = 1.0;    // factor applied to sampled maxima
  std::vector<std::string> overridden;
};

/// Throws BoundsError unless the bounds are admissible.
inline void validate(const ParamBounds& p) {
  if (!(p.a_max < 1.0))
    throw BoundsError(fmt::format("neutral coefficient not a contraction (A0 = {} >= 1)", p.a_max));
  if (!(p.a_min >= 0.0))
    throw BoundsError(fmt::format("neutral coefficient must be nonnegative (a0 = {})", p.a_min));
  if (!(p.a_min <= p.a_max))
    throw BoundsError(fmt::format("a0 = {} exceeds A0 = {}", p.a_min, p.a_max));
  if (!(p.b_min > 0.0))
    throw BoundsError(fmt::format("delayed coefficient must be positive (b0 = {})", p.b_min));
  if (!(p.b_min <= p.b_max))
    throw BoundsError(fmt::format("b0 = {} exceeds B0 = {}", p.b_min, p.b_max));
  if (!(p.tau >= 0.0) || !(p.sigma >= 0.0))
    throw BoundsError(fmt::format("lag bounds must be nonnegative (tau = {}, sigma = {})", p.tau, p.sigma));
  if (!(p.h_lag_min >= 0.0 && p.h_lag_min <= p.tau))
    throw BoundsError(fmt::format("inf of t - h(t) = {} outside [0, tau = {}]", p.h_lag_min, p.tau));
}

struct LagBounds {
  double min = 0.0;
  double max = 0.0;
  bool exact = true;
};

namespace detail {
inline double slack(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }
}  // namespace detail

/// Resolves a lag's bounds over the horizon and checks them against any
/// declared bounds and against causality (lag >= 0).
inline LagBounds resolve_lag(const DelayFunc& d, Horizon horizon, std::size_t n_samples,
                             bool force_sampling = false) {
  const FunctionRange raw = function_range(d.lag, horizon, n_samples, force_sampling);
  const FunctionRange wide = conservative(raw);
  if (raw.lo < -detail::slack(raw.lo))
    throw BoundsError(fmt::format("lag '{}' is negative (min {}): delayed argument ahead of t", d.lag.source(), raw.lo));

  LagBounds out{std::max(wide.lo, 0.0), wide.hi, raw.exact};
  if (d.declared_max) {
    if (raw.hi > *d.declared_max + detail::slack(*d.declared_max))
      throw BoundsError(fmt::format("lag '{}' reaches {} above declared max {}", d.lag.source(), raw.hi, *d.declared_max));
    out.max = *d.declared_max;
  }
  if (d.declared_min) {
    if (raw.lo < *d.declared_min - detail::slack(*d.declared_min))
      throw BoundsError(fmt::format("lag '{}' drops to {} below declared min {}", d.lag.source(), raw.lo, *d.declared_min));
    out.min = std::max(*d.declared_min, out.min);
  }
  out.min = std::min(out.min, out.max);
  return out;
}

struct ExtractOptions {
  bool force_sampling = false;
};

/// Bounds for the coefficients and lags of a neutral problem over `horizon`.
/// Constant and affine-in-sin coefficients are bounded in closed form; anything
/// else is sampled on `n_samples` points and widened (see conservative()).
inline ParamBounds extract_bounds(const NDDEProblem& problem, Horizon horizon, std::size_t n_samples,
                                  ExtractOptions opts = {}) {
  if (n_samples < 1000) throw std::invalid_argument("extract_bounds needs at least 1000 samples");
  if (!(horizon.hi > horizon.lo)) throw std::invalid_argument("extract_bounds needs a nonempty horizon");

  const FunctionRange a = conservative(function_range(problem.a, horizon, n_samples, opts.force_sampling));
  const FunctionRange b = conservative(function_range(problem.b, horizon, n_samples, opts.force_sampling));
  const LagBounds g = resolve_lag(problem.g, horizon, n_samples, opts.force_sampling);
  const LagBounds h = resolve_lag(problem.h, horizon, n_samples, opts.force_sampling);

  ParamBounds p;
  p.a_min = a.lo;
  p.a_max = a.hi;
  p.b_min = b.lo;
  p.b_max = b.hi;
  p.sigma = g.max;
  p.tau = h.max;
  p.h_lag_min = h.min;
  p.exact = a.exact && b.exact && g.exact && h.exact;
  p.inflation = p.exact ? 1.0 : kSampleInflation;
  validate(p);
  return p;
}

/// Explicit values that replace extracted ones.
struct BoundOverrides {
  std::optional<double> a_min, a_max, b_min, b_max, tau, sigma, h_lag_min;

  bool empty() const { return !(a_min || a_max || b_min || b_max || tau || sigma || h_lag_min); }
};

inline ParamBounds apply_overrides(ParamBounds p, const BoundOverrides& o) {
  auto set = [&](double& field, const std::optional<double>& v, const char* name) {
    if (v) {
      field = *v;
      p.overridden.emplace_back(name);
    }
  };
  set(p.a_min, o.a_min, "a0");
  set(p.a_max, o.a_max, "A0");
  set(p.b_min, o.b_min, "b0");
  set(p.b_max, o.b_max, "B0");
  set(p.tau, o.tau, "tau");
  set(p.sigma, o.sigma, "sigma");
  set(p.h_lag_min, o.h_lag_min, "h_lag_inf");
  validate(p);
  return p;
}

}  // namespace nstab
