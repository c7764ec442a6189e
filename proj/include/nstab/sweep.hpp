#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "nstab/criteria.hpp"

namespace nstab {

/// Maps a parameter value to the verdicts of the problem built from it.
using SweepTemplate = std::function<std::vector<Verdict>(double)>;

struct SweepSpec {
  std::string parameter;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<CriterionId> criteria;
  double tol = 1e-6;
  std::size_t scan_points = 64;
};

inline void validate(const SweepSpec& s) {
  if (!(s.lo < s.hi)) throw std::invalid_argument(fmt::format("empty sweep range [{}, {}]", s.lo, s.hi));
  if (!(s.tol > 0.0)) throw std::invalid_argument("sweep tolerance must be positive");
  if (s.scan_points < 16) throw std::invalid_argument("sweep needs at least 16 scan points");
}

/// Scan points lo + i (hi - lo) / n for i = 1..n; the lower end is excluded.
inline std::vector<double> scan_grid(const SweepSpec& s) {
  std::vector<double> xs(s.scan_points);
  const double step = (s.hi - s.lo) / static_cast<double>(s.scan_points);
  for (std::size_t i = 0; i < s.scan_points; ++i) xs[i] = s.lo + step * static_cast<double>(i + 1);
  return xs;
}

enum class ThresholdKind {
  satisfied_below,
  satisfied_above,
  satisfied_inside,
  satisfied_throughout,
  none_in_range,
  non_monotone,
};

inline const char* to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::satisfied_below: return "satisfied_below";
    case ThresholdKind::satisfied_above: return "satisfied_above";
    case ThresholdKind::satisfied_inside: return "satisfied_inside";
    case ThresholdKind::satisfied_throughout: return "satisfied_throughout";
    case ThresholdKind::none_in_range: return "none_in_range";
    case ThresholdKind::non_monotone: return "non_monotone";
  }
  return "?";
}

struct ThresholdResult {
  CriterionId criterion = CriterionId::THM1_A;
  ThresholdKind direction = ThresholdKind::none_in_range;
  std::optional<double> threshold;  // the boundary; the lower one for satisfied_inside
  std::optional<double> upper;      // upper boundary for satisfied_inside
  bool bracket_verified = false;
  std::vector<std::pair<double, bool>> scan;  // kept for non_monotone results
};

namespace detail {

inline const Verdict& pick(const std::vector<Verdict>& vs, CriterionId id, double x) {
  for (const auto& v : vs)
    if (v.criterion == id) return v;
  throw std::invalid_argument(fmt::format("template produced no {} verdict at {}", to_string(id), x));
}

inline bool satisfied_at(const SweepTemplate& tmpl, CriterionId id, double x) {
  return pick(tmpl(x), id, x).satisfied;
}

// Shrinks [sat, unsat] (either order) to width tol; returns the midpoint.
inline double bisect(const SweepTemplate& tmpl, CriterionId id, double sat, double unsat, double tol) {
  while (std::abs(unsat - sat) > tol) {
    const double mid = 0.5 * (sat + unsat);
    if (satisfied_at(tmpl, id, mid))
      sat = mid;
    else
      unsat = mid;
  }
  return 0.5 * (sat + unsat);
}

// Satisfied just inside, unsatisfied just outside, `dir` pointing outward.
inline bool verify_boundary(const SweepTemplate& tmpl, CriterionId id, double at, double dir, double tol) {
  return satisfied_at(tmpl, id, at - dir * 2.0 * tol) && !satisfied_at(tmpl, id, at + dir * 2.0 * tol);
}

}  // namespace detail

/// Boundaries of each criterion's satisfied set over the parameter range, by
/// scan followed by bisection. Patterns other than empty, full, a half-line or a
/// single interval are returned as non_monotone with the scan attached.
inline std::vector<ThresholdResult> find_threshold(const SweepSpec& spec, const SweepTemplate& tmpl) {
  validate(spec);
  const std::vector<double> xs = scan_grid(spec);
  std::vector<std::vector<Verdict>> rows;
  rows.reserve(xs.size());
  for (double x : xs) rows.push_back(tmpl(x));

  std::vector<ThresholdResult> results;
  for (CriterionId id : spec.criteria) {
    ThresholdResult res;
    res.criterion = id;
    std::vector<std::size_t> flips;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      res.scan.emplace_back(xs[i], detail::pick(rows[i], id, xs[i]).satisfied);
      if (i > 0 && res.scan[i].second != res.scan[i - 1].second) flips.push_back(i);
    }
    const bool first = res.scan.front().second;
    const double tol = spec.tol;

    if (flips.empty()) {
      res.direction = first ? ThresholdKind::satisfied_throughout : ThresholdKind::none_in_range;
      res.bracket_verified = true;
    } else if (flips.size() == 1) {
      const std::size_t i = flips[0];
      if (first) {
        res.direction = ThresholdKind::satisfied_below;
        res.threshold = detail::bisect(tmpl, id, xs[i - 1], xs[i], tol);
        res.bracket_verified = detail::verify_boundary(tmpl, id, *res.threshold, +1.0, tol);
      } else {
        res.direction = ThresholdKind::satisfied_above;
        res.threshold = detail::bisect(tmpl, id, xs[i], xs[i - 1], tol);
        res.bracket_verified = detail::verify_boundary(tmpl, id, *res.threshold, -1.0, tol);
      }
    } else if (flips.size() == 2 && !first) {
      const std::size_t i = flips[0], j = flips[1];
      res.direction = ThresholdKind::satisfied_inside;
      res.threshold = detail::bisect(tmpl, id, xs[i], xs[i - 1], tol);
      res.upper = detail::bisect(tmpl, id, xs[j - 1], xs[j], tol);
      res.bracket_verified = detail::verify_boundary(tmpl, id, *res.threshold, -1.0, tol) &&
                             detail::verify_boundary(tmpl, id, *res.upper, +1.0, tol);
    } else {
      res.direction = ThresholdKind::non_monotone;
    }
    if (res.direction != ThresholdKind::non_monotone) res.scan.clear();
    results.push_back(std::move(res));
  }
  return results;
}

struct SweepRow {
  double value = 0.0;
  Verdict verdict;
};

/// Verdict of every requested criterion at every scan point.
inline std::vector<SweepRow> sweep_grid(const SweepSpec& spec, const SweepTemplate& tmpl) {
  validate(spec);
  std::vector<SweepRow> rows;
  if (spec.criteria.empty()) return rows;
  for (double x : scan_grid(spec)) {
    const std::vector<Verdict> vs = tmpl(x);
    for (CriterionId id : spec.criteria) rows.push_back({x, detail::pick(vs, id, x)});
  }
  return rows;
}

}  // namespace nstab
