#pragma once

// CSV and JSON emission. Column and field names are part of the command-line
// contract:
//   verdicts:   criterion,lhs,rhs,margin,satisfied,precondition_ok,certifying,notes
//   trajectory: t,x[,dx]
//   sweep grid: <parameter>,criterion,satisfied,margin,lhs,rhs
// Numbers use the shortest representation that round-trips.

#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "nstab/bounds.hpp"
#include "nstab/criteria.hpp"
#include "nstab/simulator.hpp"
#include "nstab/sweep.hpp"

namespace nstab {

using json = nlohmann::json;

namespace detail {
inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string join_notes(const std::vector<std::string>& notes) {
  std::string out;
  for (const auto& n : notes) {
    if (!out.empty()) out += "; ";
    out += n;
  }
  return out;
}

// JSON has no NaN; skipped verdicts carry null sides.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
}  // namespace detail

inline json to_json(const ParamBounds& p) {
  return {{"a0", p.a_min},
          {"A0", p.a_max},
          {"b0", p.b_min},
          {"B0", p.b_max},
          {"tau", p.tau},
          {"sigma", p.sigma},
          {"h_lag_inf", p.h_lag_min},
          {"exact", p.exact},
          {"inflation", p.inflation},
          {"overridden", p.overridden}};
}

inline json to_json(const Verdict& v) {
  return {{"criterion", std::string(to_string(v.criterion))},
          {"lhs", detail::number_or_null(v.lhs)},
          {"rhs", detail::number_or_null(v.rhs)},
          {"margin", detail::number_or_null(v.margin)},
          {"satisfied", v.satisfied},
          {"precondition_ok", v.precondition_ok},
          {"certifying", v.certifying},
          {"notes", v.notes}};
}

inline json to_json(const DecayEstimate& d) {
  return {{"gamma_est", std::isinf(d.gamma_est) ? json("inf") : json(d.gamma_est)},
          {"M_est", d.M_est},
          {"fit_residual", d.fit_residual},
          {"verdict", to_string(d.verdict)},
          {"envelope_start", d.envelope_start},
          {"envelope_end", d.envelope_end},
          {"tail_fraction", d.options.tail_fraction},
          {"drop_ratio", d.options.drop_ratio},
          {"window", d.options.window},
          {"center", d.options.center}};
}

inline json to_json(const ThresholdResult& r) {
  json j{{"criterion", std::string(to_string(r.criterion))},
         {"direction", to_string(r.direction)},
         {"threshold", r.threshold ? json(*r.threshold) : json("none in range")},
         {"bracket_verified", r.bracket_verified}};
  if (r.upper) j["upper"] = *r.upper;
  if (!r.scan.empty()) {
    json scan = json::array();
    for (const auto& [x, sat] : r.scan) scan.push_back({{"value", x}, {"satisfied", sat}});
    j["scan"] = std::move(scan);
  }
  return j;
}

inline void write_verdicts_csv(std::ostream& os, const std::vector<Verdict>& verdicts) {
  os << "criterion,lhs,rhs,margin,satisfied,precondition_ok,certifying,notes\n";
  for (const auto& v : verdicts) {
    os << fmt::format("{},{},{},{},{},{},{},{}\n", to_string(v.criterion), v.lhs, v.rhs, v.margin, v.satisfied,
                      v.precondition_ok, v.certifying, detail::csv_quote(detail::join_notes(v.notes)));
  }
}

/// Two columns (t, x) or three (t, x, dx); dx is the right limit at each node.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, bool with_derivative = true) {
  os << (with_derivative ? "t,x,dx\n" : "t,x\n");
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (with_derivative)
      os << fmt::format("{},{},{}\n", tr.time(k), tr.x[k], tr.dx[k]);
    else
      os << fmt::format("{},{}\n", tr.time(k), tr.x[k]);
  }
}

inline void write_sweep_csv(std::ostream& os, const std::string& parameter, const std::vector<SweepRow>& rows) {
  os << parameter << ",criterion,satisfied,margin,lhs,rhs\n";
  for (const auto& r : rows)
    os << fmt::format("{},{},{},{},{},{}\n", r.value, to_string(r.verdict.criterion), r.verdict.satisfied,
                      r.verdict.margin, r.verdict.lhs, r.verdict.rhs);
}

}  // namespace nstab
