#pragma once

// Iterated delays g^[k] and the series form of (I - S)^{-1}, where
// (S y)(t) = a(t) y(g(t)). The same series produces the aggregated
// coefficient B(t) of the equivalent equation with infinitely many delays.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "nstab/bounds.hpp"
#include "nstab/error.hpp"
#include "nstab/funcspec.hpp"

namespace nstab {

inline constexpr std::size_t kSeriesDepthCap = 10000;

/// g^[0](t) = t, g^[1](t) = g(t), ..., g^[depth](t).
struct IteratedDelayCache {
  double base_t = 0.0;
  std::vector<double> values;

  std::size_t depth() const { return values.empty() ? 0 : values.size() - 1; }
  double operator[](std::size_t k) const { return values[k]; }
};

inline IteratedDelayCache iterate_delays(const DelayFunc& g, double t, std::size_t depth) {
  IteratedDelayCache cache{t, {}};
  cache.values.reserve(depth + 1);
  cache.values.push_back(t);
  for (std::size_t k = 1; k <= depth; ++k) cache.values.push_back(g(cache.values.back()));
  return cache;
}

inline double iterated_delay(const DelayFunc& g, double t, std::size_t k) {
  for (std::size_t i = 0; i < k; ++i) t = g(t);
  return t;
}

struct SeriesResult {
  double value = 0.0;
  std::size_t truncation_depth = 0;
  double tail_bound = 0.0;  // A0^(J+1) sup|y| / (1 - A0), below A0^J sup|y| / (1 - A0)
};

/// Bounds the series truncation relies on.
struct SeriesBounds {
  double a_max = 0.0;  // sup |a|, must be < 1
  double y_sup = 1.0;  // sup |y| over the region the iterates visit
  // Start of the equation; terms whose argument g^[j](t) falls before it vanish.
  std::optional<double> t0;
};

/// Smallest J with a_max^J * y_sup / (1 - a_max) < tol.
inline std::size_t series_depth(double a_max, double y_sup, double tol) {
  if (!(a_max >= 0.0 && a_max < 1.0)) throw std::invalid_argument(fmt::format("series needs 0 <= A0 < 1 (A0 = {})", a_max));
  if (!(tol > 0.0)) throw std::invalid_argument("series tolerance must be positive");
  double bound = std::abs(y_sup) / (1.0 - a_max);
  std::size_t depth = 0;
  while (bound >= tol) {
    if (a_max == 0.0) return 0;
    if (++depth > kSeriesDepthCap)
      throw std::runtime_error(fmt::format("tolerance {} unreachable within {} terms (A0 = {})", tol, kSeriesDepthCap, a_max));
    bound *= a_max;
  }
  return depth;
}

/// Bound on the terms after `depth`: sum_{j>depth} A0^j sup|y|.
inline double series_tail_bound(double a_max, double y_sup, std::size_t depth) {
  return std::pow(a_max, static_cast<double>(depth + 1)) * std::abs(y_sup) / (1.0 - a_max);
}

/// y(t) + sum_{j=1..depth} prod_{k=0..j-1} a(g^[k](t)) * y(g^[j](t)).
inline SeriesResult apply_inverse_neutral_truncated(const FuncExpr& y, const FuncExpr& a, const DelayFunc& g, double t,
                                                    std::size_t depth, const SeriesBounds& bounds) {
  SeriesResult out;
  out.truncation_depth = depth;
  out.tail_bound = series_tail_bound(bounds.a_max, bounds.y_sup, depth);
  if (bounds.t0 && t < *bounds.t0) return out;
  out.value = y(t);
  double weight = 1.0;
  double s = t;
  for (std::size_t j = 1; j <= depth; ++j) {
    weight *= a(s);
    s = g(s);
    if (bounds.t0 && s < *bounds.t0) break;
    out.value += weight * y(s);
  }
  return out;
}

/// ((I - S)^{-1} y)(t) with the depth chosen from the a-priori geometric tail.
inline SeriesResult apply_inverse_neutral(const FuncExpr& y, const FuncExpr& a, const DelayFunc& g, double t,
                                          double tol, const SeriesBounds& bounds) {
  return apply_inverse_neutral_truncated(y, a, g, t, series_depth(bounds.a_max, bounds.y_sup, tol), bounds);
}

/// B(t) = b(t) + sum_{j>=1} prod_{k=0..j-1} a(g^[k](t)) b(g^[j](t)).
///
/// With `t0` set, b is taken as b0 for arguments at or before t0. The result is
/// checked against b0/(1 - a0) <= B(t) <= B0/(1 - A0); a violation beyond `tol`
/// means the supplied bounds do not hold for a or b.
inline SeriesResult aggregated_coefficient(const FuncExpr& a, const FuncExpr& b, const DelayFunc& g, double t,
                                           double tol, const ParamBounds& p, std::optional<double> t0 = std::nullopt) {
  const std::size_t depth = series_depth(p.a_max, p.b_max, tol);
  auto b_at = [&](double s) { return t0 && s <= *t0 ? p.b_min : b(s); };

  SeriesResult out;
  out.truncation_depth = depth;
  out.tail_bound = series_tail_bound(p.a_max, p.b_max, depth);
  out.value = b_at(t);
  double weight = 1.0;
  double s = t;
  for (std::size_t j = 1; j <= depth; ++j) {
    weight *= a(s);
    s = g(s);
    out.value += weight * b_at(s);
  }

  const double lower = p.b_min / (1.0 - p.a_min);
  const double upper = p.b_max / (1.0 - p.a_max);
  const double slack = tol + 1e-12 * upper;  // rounding in the partial sums
  if (out.value + out.tail_bound < lower - slack || out.value > upper + slack)
    throw ConsistencyError(fmt::format("B({}) = {} outside [{}, {}]: coefficient bounds do not hold", t, out.value, lower, upper));
  return out;
}

}  // namespace nstab
