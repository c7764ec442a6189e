#pragma once

// Explicit sufficient conditions for uniform exponential stability of
//   x'(t) - a(t) x'(g(t)) = -b(t) x(h(t))
// and for local stability of the neutral logistic equation, plus the two
// comparison tests quoted alongside them (Tang-Zou window integrals and Yu's
// condition for the autonomous logistic model).

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "nstab/bounds.hpp"
#include "nstab/funcspec.hpp"
#include "nstab/problem.hpp"
#include "nstab/quadrature.hpp"

namespace nstab {

enum class CriterionId {
  THM1_A,
  THM1_B,
  COR1_A,
  COR1_B,
  COR2,
  LOG_THM_A,
  LOG_THM_B,
  LOG_THM_A_DERIVED,
  LOG_THM_B_DERIVED,
  LOG_COR,
  YU_PROP1,
  TANGZOU_1,
  TANGZOU_2,
};

inline constexpr std::array<CriterionId, 13> kAllCriteria = {
    CriterionId::THM1_A,    CriterionId::THM1_B,           CriterionId::COR1_A,
    CriterionId::COR1_B,    CriterionId::COR2,             CriterionId::LOG_THM_A,
    CriterionId::LOG_THM_B, CriterionId::LOG_THM_A_DERIVED, CriterionId::LOG_THM_B_DERIVED,
    CriterionId::LOG_COR,   CriterionId::YU_PROP1,          CriterionId::TANGZOU_1,
    CriterionId::TANGZOU_2};

constexpr std::string_view to_string(CriterionId id) {
  switch (id) {
    case CriterionId::THM1_A: return "THM1_A";
    case CriterionId::THM1_B: return "THM1_B";
    case CriterionId::COR1_A: return "COR1_A";
    case CriterionId::COR1_B: return "COR1_B";
    case CriterionId::COR2: return "COR2";
    case CriterionId::LOG_THM_A: return "LOG_THM_A";
    case CriterionId::LOG_THM_B: return "LOG_THM_B";
    case CriterionId::LOG_THM_A_DERIVED: return "LOG_THM_A_DERIVED";
    case CriterionId::LOG_THM_B_DERIVED: return "LOG_THM_B_DERIVED";
    case CriterionId::LOG_COR: return "LOG_COR";
    case CriterionId::YU_PROP1: return "YU_PROP1";
    case CriterionId::TANGZOU_1: return "TANGZOU_1";
    case CriterionId::TANGZOU_2: return "TANGZOU_2";
  }
  return "?";
}

inline std::optional<CriterionId> criterion_from_string(std::string_view name) {
  for (CriterionId id : kAllCriteria)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

/// One evaluated inequality lhs < rhs.
///
/// `certifying` is false for verdicts that are reported but must not be used to
/// claim stability: skipped criteria, tests evaluated on a companion equation,
/// and the printed logistic forms whose parameter mapping disagrees with the
/// linearized equation.
struct Verdict {
  CriterionId criterion = CriterionId::THM1_A;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  double margin = 0.0;
  bool precondition_ok = true;
  std::vector<std::string> notes;
  bool certifying = true;
};

inline Verdict make_verdict(CriterionId id, double lhs, double rhs, bool precondition_ok = true,
                            std::vector<std::string> notes = {}) {
  Verdict v;
  v.criterion = id;
  v.lhs = lhs;
  v.rhs = rhs;
  v.margin = rhs - lhs;
  v.precondition_ok = precondition_ok;
  v.satisfied = precondition_ok && lhs < rhs;
  v.notes = std::move(notes);
  return v;
}

inline Verdict skipped_verdict(CriterionId id, std::string reason) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  Verdict v = make_verdict(id, nan, nan, false, {"skipped: " + std::move(reason)});
  v.certifying = false;
  return v;
}

inline constexpr double kInvE = 1.0 / std::numbers::e;

/// tau*B0 + sigma*A0*B0^2*(1 - a0) / ((1 - A0)^2 * b0). The second term is
/// exactly zero when sigma = 0 (g(t) = t) or A0 = 0.
inline double stability_lhs(const ParamBounds& p) {
  double lhs = p.tau * p.b_max;
  if (p.sigma != 0.0 && p.a_max != 0.0) {
    const double q = 1.0 - p.a_max;
    lhs += p.sigma * p.a_max * p.b_max * p.b_max * (1.0 - p.a_min) / (q * q * p.b_min);
  }
  return lhs;
}

inline Verdict eval_thm1_a(const ParamBounds& p, CriterionId id = CriterionId::THM1_A) {
  return make_verdict(id, stability_lhs(p), 1.0 - p.a_max);
}

/// Lower lag bound required by part b): (1 - A0) / (e B0).
inline double thm1_b_lag_threshold(const ParamBounds& p) { return (1.0 - p.a_max) * kInvE / p.b_max; }

inline Verdict eval_thm1_b(const ParamBounds& p, CriterionId id = CriterionId::THM1_B) {
  const double need = thm1_b_lag_threshold(p);
  const bool pre = p.h_lag_min >= need;
  std::vector<std::string> notes;
  if (!pre) notes.push_back(fmt::format("inf(t - h(t)) = {} < (1 - A0)/(e B0) = {}", p.h_lag_min, need));
  return make_verdict(id, stability_lhs(p), (1.0 + kInvE) * (1.0 - p.a_max), pre, std::move(notes));
}

/// Constant coefficients a, b.
inline std::pair<Verdict, Verdict> eval_cor1(double a, double b, double tau, double sigma, double h_lag_min) {
  if (!(a >= 0.0 && a < 1.0) || !(b > 0.0))
    throw std::invalid_argument(fmt::format("eval_cor1 needs 0 <= a < 1 and b > 0 (a = {}, b = {})", a, b));
  double lhs = tau * b;
  if (sigma != 0.0 && a != 0.0) lhs += sigma * a * b / (1.0 - a);
  const double need = (1.0 - a) * kInvE / b;
  const bool pre = h_lag_min >= need;
  std::vector<std::string> notes;
  if (!pre) notes.push_back(fmt::format("inf(t - h(t)) = {} < (1 - a)/(e b) = {}", h_lag_min, need));
  return {make_verdict(CriterionId::COR1_A, lhs, 1.0 - a),
          make_verdict(CriterionId::COR1_B, lhs, (1.0 + kInvE) * (1.0 - a), pre, std::move(notes))};
}

/// Non-delayed rate term, h(t) = t. The caller is responsible for that case.
inline Verdict eval_cor2(const ParamBounds& p) {
  double lhs = 0.0;
  if (p.sigma != 0.0 && p.a_max != 0.0) {
    const double q = 1.0 - p.a_max;
    lhs = p.sigma * p.a_max * p.b_max * p.b_max * (1.0 - p.a_min) / (q * q * q * p.b_min);
  }
  return make_verdict(CriterionId::COR2, lhs, 1.0);
}

enum class LogisticMode { as_stated, derived };

/// Scalar data of the logistic tests: r_min <= r(t) <= r_max and the lag bounds.
struct LogisticBounds {
  double r_min = 0.0;
  double r_max = 0.0;
  double rho = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
  double h_lag_min = 0.0;
};

/// Coefficient bounds of the linearization z' = rho r(t) z'(g) - r(t) z(h).
inline ParamBounds linearized_bounds(const LogisticBounds& l) {
  ParamBounds p;
  p.a_min = l.r_min * l.rho;
  p.a_max = l.r_max * l.rho;
  p.b_min = l.r_min;
  p.b_max = l.r_max;
  p.tau = l.tau;
  p.sigma = l.sigma;
  p.h_lag_min = l.h_lag_min;
  return p;
}

/// as_stated evaluates the printed inequalities
///   tau R0 rho + sigma R0^2 rho (1 - r0) / ((1 - R0)^2 r0) < 1 - R0   (and the 1 + 1/e variant);
/// derived maps the linearization onto THM1_A/B with a = rho r, b = r.
inline std::pair<Verdict, Verdict> eval_logistic_thm(const LogisticBounds& l, LogisticMode mode) {
  if (!(l.r_min > 0.0 && l.r_min <= l.r_max))
    throw std::invalid_argument(fmt::format("logistic rate bounds need 0 < r0 <= R0 (r0 = {}, R0 = {})", l.r_min, l.r_max));
  if (!(l.rho >= 0.0)) throw std::invalid_argument("rho must be nonnegative");

  if (mode == LogisticMode::derived) {
    const ParamBounds p = linearized_bounds(l);
    if (!(p.a_max < 1.0)) {
      const std::string why = fmt::format("R0 rho = {} >= 1: neutral term is not a contraction", p.a_max);
      Verdict a = make_verdict(CriterionId::LOG_THM_A_DERIVED, stability_lhs(p), 1.0 - p.a_max, false, {why});
      Verdict b = make_verdict(CriterionId::LOG_THM_B_DERIVED, stability_lhs(p), (1.0 + kInvE) * (1.0 - p.a_max), false, {why});
      return {a, b};
    }
    Verdict a = eval_thm1_a(p, CriterionId::LOG_THM_A_DERIVED);
    Verdict b = eval_thm1_b(p, CriterionId::LOG_THM_B_DERIVED);
    a.notes.emplace_back("linearization mapped as a0 = r0 rho, A0 = R0 rho, b0 = r0, B0 = R0");
    b.notes.emplace_back("linearization mapped as a0 = r0 rho, A0 = R0 rho, b0 = r0, B0 = R0");
    return {a, b};
  }

  const double r0 = l.r_min, R0 = l.r_max;
  const double q = 1.0 - R0;
  std::vector<std::string> notes{"printed form; its parameter mapping disagrees with the linearization, not used to certify"};
  bool pre = true;
  if (!(R0 < 1.0)) {
    pre = false;
    notes.push_back(fmt::format("R0 = {} >= 1: printed right-hand side 1 - R0 is nonpositive", R0));
  }
  double lhs = l.tau * R0 * l.rho;
  if (l.sigma != 0.0) lhs += l.sigma * R0 * R0 * l.rho * (1.0 - r0) / (q * q * r0);

  Verdict a = make_verdict(CriterionId::LOG_THM_A, lhs, q, pre, notes);
  const double need = l.rho > 0.0 ? q * kInvE / (R0 * l.rho) : HUGE_VAL;
  const bool lag_ok = l.h_lag_min >= need;
  if (!lag_ok) notes.push_back(fmt::format("inf(t - h(t)) = {} < (1 - R0)/(e R0 rho) = {}", l.h_lag_min, need));
  Verdict b = make_verdict(CriterionId::LOG_THM_B, lhs, (1.0 + kInvE) * q, pre && lag_ok, notes);
  a.certifying = b.certifying = false;
  return {a, b};
}

/// Autonomous model x' = r0 x (1 - (x(t - tau) - rho x'(t - tau)) / K):
/// tau r0 rho < (1 - r0)^2, or (1 - r0)/e < tau r0 rho < (1 + 1/e)(1 - r0)^2.
/// lhs/rhs describe the branch that decides the verdict.
inline Verdict eval_logistic_cor(double r0, double rho, double tau) {
  const double lhs = tau * r0 * rho;
  const double q2 = (1.0 - r0) * (1.0 - r0);
  const double lower = (1.0 - r0) * kInvE;
  std::vector<std::string> notes{"printed form; its parameter mapping disagrees with the linearization, not used to certify"};
  const bool wellposed = r0 * rho < 1.0;
  if (!wellposed) notes.push_back(fmt::format("r0 rho = {} >= 1: neutral term is not a contraction", r0 * rho));

  Verdict v;
  if (lhs < q2) {
    v = make_verdict(CriterionId::LOG_COR, lhs, q2, wellposed, notes);
    v.notes.emplace_back("first branch: tau r0 rho < (1 - r0)^2");
  } else if (lhs > lower) {
    v = make_verdict(CriterionId::LOG_COR, lhs, (1.0 + kInvE) * q2, wellposed, notes);
    v.notes.emplace_back("second branch: (1 - r0)/e < tau r0 rho < (1 + 1/e)(1 - r0)^2");
  } else {
    v = make_verdict(CriterionId::LOG_COR, lhs, q2, wellposed, notes);
    v.notes.emplace_back("first branch fails and tau r0 rho <= (1 - r0)/e");
  }
  v.certifying = false;
  return v;
}

/// 2 r0 |rho| (2 - r0 |rho|) + r0 tau < 3/2.
inline Verdict eval_yu_prop1(double r0, double rho, double tau) {
  if (!(r0 > 0.0)) throw std::invalid_argument("eval_yu_prop1 needs r0 > 0");
  const double s = r0 * std::abs(rho);
  return make_verdict(CriterionId::YU_PROP1, 2.0 * s * (2.0 - s) + r0 * tau, 1.5, true,
                      {"rate in the delay term read as r0"});
}

/// Window lengths and right-hand sides of the two Tang-Zou tests for a constant
/// neutral coefficient a.
struct TangZouSetup {
  int N = 1;
  double window1 = 0.0;  // 3 tau + (N - 1) sigma
  double window2 = 0.0;  // tau + (N - 1) sigma
  double rhs1 = 0.0;     // 3/2 - 2 a (1 - a/4)
  double rhs2 = 0.0;     // (3 - 4 a^N)(1 - a) / (2 (1 - a^N))
};

inline TangZouSetup tangzou_setup(double a, double tau, double sigma) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument(fmt::format("Tang-Zou tests need 0 < a < 1 (a = {})", a));
  TangZouSetup s;
  double aN = a;
  while (a + 1.5 * aN > 1.0) {
    ++s.N;
    aN *= a;
  }
  s.window1 = 3.0 * tau + (s.N - 1) * sigma;
  s.window2 = tau + (s.N - 1) * sigma;
  s.rhs1 = 1.5 - 2.0 * a * (1.0 - 0.25 * a);
  s.rhs2 = (3.0 - 4.0 * aN) * (1.0 - a) / (2.0 * (1.0 - aN));
  return s;
}

struct TangZouOptions {
  bool force_numeric = false;
  double t_start = 0.0;
  double step = 1e-3;  // target quadrature step for numeric limsup
};

/// limsup over t of the integral of b over [t - width, t]. Closed form for
/// harmonic b; otherwise the max over window end points in
/// [t_start + width, t_start + horizon].
inline double window_limsup(const FuncExpr& b, double width, double horizon, const TangZouOptions& opts = {}) {
  if (!opts.force_numeric) {
    if (auto h = recognize_harmonic(b)) {
      double v = h->mean * width;
      if (h->amplitude != 0.0) v += 2.0 * h->amplitude / h->omega * std::abs(std::sin(0.5 * h->omega * width));
      return v;
    }
  }
  if (horizon < 3.0 * width)
    throw std::invalid_argument(fmt::format("horizon {} shorter than 3 windows of {}; limsup unreliable", horizon, width));
  const auto panels = static_cast<std::size_t>(std::ceil(width / opts.step));
  return max_window_integral(b, width, opts.t_start, opts.t_start + horizon, panels).value;
}

inline std::pair<Verdict, Verdict> eval_tangzou(double a, const FuncExpr& b, double tau, double sigma,
                                                double horizon, const TangZouOptions& opts = {}) {
  const TangZouSetup s = tangzou_setup(a, tau, sigma);
  const double i1 = window_limsup(b, s.window1, horizon, opts);
  const double i2 = window_limsup(b, s.window2, horizon, opts);
  Verdict v1 = make_verdict(CriterionId::TANGZOU_1, i1, s.rhs1, true,
                            {fmt::format("N = {}, window = {}", s.N, s.window1)});
  Verdict v2 = make_verdict(CriterionId::TANGZOU_2, i2, s.rhs2, true,
                            {fmt::format("N = {}, window = {}", s.N, s.window2)});
  return {v1, v2};
}

struct CheckOptions {
  std::optional<Horizon> horizon;  // defaults to [t0, t0 + 200]
  std::size_t n_samples = 20000;
  bool force_sampling = false;
  BoundOverrides overrides;
  // Evaluate Tang-Zou on the constant-delay companion h(t) = t - tau when the
  // actual lag varies. Such verdicts never certify.
  bool tangzou_companion = false;
  double tangzou_horizon = 200.0;
};

struct CheckReport {
  ParamBounds bounds;
  std::vector<Verdict> verdicts;
  bool certified = false;

  const Verdict* find(CriterionId id) const {
    for (const auto& v : verdicts)
      if (v.criterion == id) return &v;
    return nullptr;
  }
};

inline bool any_certifies(const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts)
    if (v.satisfied && v.certifying) return true;
  return false;
}

inline Horizon default_horizon(double t0, const CheckOptions& opts) {
  return opts.horizon.value_or(Horizon{t0, t0 + 200.0});
}

/// Runs every criterion that applies to the neutral problem; the rest are
/// reported as skipped.
inline CheckReport check_all(const NDDEProblem& problem, const CheckOptions& opts = {}) {
  CheckReport report;
  ParamBounds p = extract_bounds(problem, default_horizon(problem.t0, opts), opts.n_samples,
                                 {opts.force_sampling});
  if (!opts.overrides.empty()) p = apply_overrides(p, opts.overrides);
  report.bounds = p;
  auto& out = report.verdicts;

  out.push_back(eval_thm1_a(p));
  out.push_back(eval_thm1_b(p));

  const bool a_const = p.a_min == p.a_max;
  const bool b_const = p.b_min == p.b_max;
  if (a_const && b_const) {
    auto [c1a, c1b] = eval_cor1(p.a_max, p.b_max, p.tau, p.sigma, p.h_lag_min);
    out.push_back(std::move(c1a));
    out.push_back(std::move(c1b));
  } else {
    out.push_back(skipped_verdict(CriterionId::COR1_A, "coefficients a, b are not constant"));
    out.push_back(skipped_verdict(CriterionId::COR1_B, "coefficients a, b are not constant"));
  }

  if (p.tau == 0.0)
    out.push_back(eval_cor2(p));
  else
    out.push_back(skipped_verdict(CriterionId::COR2, "requires h(t) = t"));

  const bool g_const = problem.g.lag.is_constant();
  const bool h_const = problem.h.lag.is_constant();
  if (!(a_const && p.a_max > 0.0)) {
    out.push_back(skipped_verdict(CriterionId::TANGZOU_1, "requires constant 0 < a < 1"));
    out.push_back(skipped_verdict(CriterionId::TANGZOU_2, "requires constant 0 < a < 1"));
  } else if (!g_const || (!h_const && !opts.tangzou_companion)) {
    out.push_back(skipped_verdict(CriterionId::TANGZOU_1, "requires constant delays"));
    out.push_back(skipped_verdict(CriterionId::TANGZOU_2, "requires constant delays"));
  } else {
    TangZouOptions tz;
    tz.t_start = problem.t0;
    auto [v1, v2] = eval_tangzou(p.a_max, problem.b, p.tau, p.sigma, opts.tangzou_horizon, tz);
    if (!h_const) {
      for (Verdict* v : {&v1, &v2}) {
        v->certifying = false;
        v->notes.push_back(fmt::format("evaluated on the constant-delay companion h(t) = t - {}", p.tau));
      }
    }
    out.push_back(std::move(v1));
    out.push_back(std::move(v2));
  }

  report.certified = any_certifies(out);
  return report;
}

}  // namespace nstab
