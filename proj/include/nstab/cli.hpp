#pragma once

// Problem configuration files and the check / simulate / sweep / fundamental
// commands. A configuration is an INI document:
//
//   [equation]   kind = neutral | logistic
//                neutral:  a, b, f, g_lag, h_lag, phi, psi, t0
//                logistic: r, K, rho, g_lag, h_lag, phi, psi, t0
//                optional declared lag bounds: g_lag_max, h_lag_max, h_lag_min
//   [params]     named scalars usable inside every expression
//   [bounds]     optional overrides: a0, A0, b0, B0, tau, sigma, h_lag_inf
//   [check]      horizon, samples, force_sampling, tangzou_companion, tangzou_horizon
//   [simulate]   T, dt, tail_fraction, drop_ratio, random_histories, seed
//   [sweep]      parameter, lo, hi, tol, scan_points, criteria (comma separated)
//   [output]     format = csv | json, dir
//
// Values may be quoted. Lines starting with ';' or '#' are comments.
//
// Exit codes: 0 = certified / decaying / done, 10 = analysis ran but nothing
// certified (or the run did not decay), 2 = configuration or input error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "nstab/bounds.hpp"
#include "nstab/criteria.hpp"
#include "nstab/error.hpp"
#include "nstab/funcspec.hpp"
#include "nstab/logistic.hpp"
#include "nstab/problem.hpp"
#include "nstab/report.hpp"
#include "nstab/simulator.hpp"
#include "nstab/sweep.hpp"

namespace nstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitUncertified = 10;

enum class EquationKind { neutral, logistic };
enum class OutputFormat { csv, json };

struct SimulateSettings {
  double T = 100.0;
  double dt = 0.01;
  double tail_fraction = 0.5;
  double drop_ratio = 0.01;
  int random_histories = 0;
  std::uint64_t seed = 1;
};

struct SweepSettings {
  std::string parameter;
  double lo = 0.0;
  double hi = 1.0;
  double tol = 1e-6;
  std::size_t scan_points = 64;
  std::vector<CriterionId> criteria;
};

struct ProblemConfig {
  EquationKind kind = EquationKind::neutral;
  NDDEProblem neutral;
  LogisticProblem logistic;
  Bindings params;
  CheckOptions check;
  SimulateSettings simulate;
  std::optional<SweepSettings> sweep;
  OutputFormat format = OutputFormat::csv;
  std::string out_dir;
};

using Tree = boost::property_tree::ptree;

namespace detail {

inline std::string unquote(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    s = s.substr(1, s.size() - 2);
  return s;
}

class Reader {
 public:
  Reader(const Tree& tree, const Bindings& bindings) : tree_(tree), bindings_(bindings) {}

  std::optional<std::string> text(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return unquote(*v);
  }

  FuncExpr expr(const std::string& key, const std::string& fallback) const {
    const std::string src = text(key).value_or(fallback);
    try {
      return parse(src, bindings_);
    } catch (const ParseError& e) {
      throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
  }

  std::optional<double> number(const std::string& key) const {
    auto src = text(key);
    if (!src) return std::nullopt;
    try {
      const FuncExpr e = parse(*src, bindings_);
      if (!e.is_constant()) throw ConfigError(fmt::format("{} must be a constant, got '{}'", key, *src));
      return e(0.0);
    } catch (const ParseError& e) {
      throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
  }

  double number(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

  bool flag(const std::string& key, bool fallback) const {
    auto v = text(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(fmt::format("{} must be true or false, got '{}'", key, *v));
  }

  DelayFunc delay(const std::string& prefix) const {
    DelayFunc d{expr("equation." + prefix, "0"), number("equation." + prefix + "_max"),
                number("equation." + prefix + "_min")};
    return d;
  }

 private:
  const Tree& tree_;
  const Bindings& bindings_;
};

inline std::vector<CriterionId> parse_criteria(const std::string& list) {
  std::vector<CriterionId> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (item.empty()) continue;
    auto id = criterion_from_string(item);
    if (!id) throw ConfigError(fmt::format("unknown criterion '{}'", item));
    out.push_back(*id);
  }
  return out;
}

}  // namespace detail

inline Tree read_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  Tree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.message()));
  }
  return tree;
}

/// Builds the configuration; `extra` bindings override [params].
inline ProblemConfig parse_config(const Tree& tree, const Bindings& extra = {}) {
  ProblemConfig cfg;
  if (auto params = tree.get_child_optional("params")) {
    for (const auto& [name, node] : *params) {
      Bindings none;
      detail::Reader r(tree, none);
      auto v = r.number("params." + name);
      cfg.params[name] = *v;
    }
  }
  for (const auto& [k, v] : extra) cfg.params[k] = v;
  const detail::Reader r(tree, cfg.params);

  const std::string kind = r.text("equation.kind").value_or("neutral");
  if (kind == "neutral") {
    cfg.kind = EquationKind::neutral;
    auto& p = cfg.neutral;
    p.a = r.expr("equation.a", "0");
    p.b = r.expr("equation.b", "0");
    p.f = r.expr("equation.f", "0");
    p.g = r.delay("g_lag");
    p.h = r.delay("h_lag");
    p.phi = r.expr("equation.phi", "0");
    p.psi = r.expr("equation.psi", "0");
    p.t0 = r.number("equation.t0", 0.0);
  } else if (kind == "logistic") {
    cfg.kind = EquationKind::logistic;
    auto& p = cfg.logistic;
    p.r = r.expr("equation.r", "0");
    p.K = r.number("equation.K", 1.0);
    p.rho = r.number("equation.rho", 0.0);
    p.g = r.delay("g_lag");
    p.h = r.delay("h_lag");
    p.phi = r.expr("equation.phi", fmt::format("{}", p.K));
    p.psi = r.expr("equation.psi", "0");
    p.t0 = r.number("equation.t0", 0.0);
  } else {
    throw ConfigError(fmt::format("equation.kind must be neutral or logistic, got '{}'", kind));
  }

  auto& o = cfg.check.overrides;
  o.a_min = r.number("bounds.a0");
  o.a_max = r.number("bounds.A0");
  o.b_min = r.number("bounds.b0");
  o.b_max = r.number("bounds.B0");
  o.tau = r.number("bounds.tau");
  o.sigma = r.number("bounds.sigma");
  o.h_lag_min = r.number("bounds.h_lag_inf");

  const double t0 = cfg.kind == EquationKind::neutral ? cfg.neutral.t0 : cfg.logistic.t0;
  cfg.check.horizon = Horizon{t0, t0 + r.number("check.horizon", 200.0)};
  cfg.check.n_samples = static_cast<std::size_t>(r.number("check.samples", 20000));
  cfg.check.force_sampling = r.flag("check.force_sampling", false);
  cfg.check.tangzou_companion = r.flag("check.tangzou_companion", false);
  cfg.check.tangzou_horizon = r.number("check.tangzou_horizon", 200.0);

  auto& s = cfg.simulate;
  s.T = r.number("simulate.T", s.T);
  s.dt = r.number("simulate.dt", s.dt);
  s.tail_fraction = r.number("simulate.tail_fraction", s.tail_fraction);
  s.drop_ratio = r.number("simulate.drop_ratio", s.drop_ratio);
  s.random_histories = static_cast<int>(r.number("simulate.random_histories", 0));
  s.seed = static_cast<std::uint64_t>(r.number("simulate.seed", 1));

  if (tree.get_child_optional("sweep")) {
    SweepSettings sw;
    sw.parameter = r.text("sweep.parameter").value_or("");
    if (sw.parameter.empty()) throw ConfigError("sweep.parameter is required");
    sw.lo = r.number("sweep.lo", sw.lo);
    sw.hi = r.number("sweep.hi", sw.hi);
    sw.tol = r.number("sweep.tol", sw.tol);
    sw.scan_points = static_cast<std::size_t>(r.number("sweep.scan_points", 64));
    sw.criteria = detail::parse_criteria(r.text("sweep.criteria").value_or(""));
    cfg.sweep = sw;
  }

  const std::string fmt_name = r.text("output.format").value_or("csv");
  if (fmt_name == "csv")
    cfg.format = OutputFormat::csv;
  else if (fmt_name == "json")
    cfg.format = OutputFormat::json;
  else
    throw ConfigError(fmt::format("output.format must be csv or json, got '{}'", fmt_name));
  cfg.out_dir = r.text("output.dir").value_or("");
  return cfg;
}

/// Command-line flags that override the configuration.
struct CommandArgs {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<double> dt;
  std::optional<double> horizon;  // simulation end time T
  std::optional<double> s;        // start of the fundamental function
  std::optional<std::uint64_t> seed;
};

inline ProblemConfig load_config(const CommandArgs& args, const Bindings& extra = {}) {
  ProblemConfig cfg = parse_config(read_tree(args.config_path), extra);
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  if (args.format) {
    if (*args.format == "csv")
      cfg.format = OutputFormat::csv;
    else if (*args.format == "json")
      cfg.format = OutputFormat::json;
    else
      throw ConfigError(fmt::format("--format must be csv or json, got '{}'", *args.format));
  }
  if (args.dt) cfg.simulate.dt = *args.dt;
  if (args.horizon) cfg.simulate.T = *args.horizon;
  if (args.seed) cfg.simulate.seed = *args.seed;
  return cfg;
}

namespace detail {

inline CheckReport run_check(const ProblemConfig& cfg) {
  if (cfg.kind == EquationKind::neutral) return check_all(cfg.neutral, cfg.check);
  return check_local_stability(cfg.logistic, cfg.check);
}

inline json options_json(const ProblemConfig& cfg) {
  const CheckOptions& c = cfg.check;
  return {{"horizon", {c.horizon->lo, c.horizon->hi}},
          {"samples", c.n_samples},
          {"force_sampling", c.force_sampling},
          {"sample_inflation", kSampleInflation},
          {"sample_deflation", kSampleDeflation},
          {"tangzou_companion", c.tangzou_companion},
          {"tangzou_horizon", c.tangzou_horizon}};
}

inline void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}/{}", dir, name));
  out << content;
}

inline void csv_header_block(std::ostream& os, const json& j, const std::string& prefix = "") {
  for (const auto& [k, v] : j.items()) {
    if (v.is_object())
      csv_header_block(os, v, prefix + k + ".");
    else
      os << "# " << prefix << k << " = " << v.dump() << '\n';
  }
}

}  // namespace detail

inline int cmd_check(const CommandArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const ProblemConfig cfg = load_config(args);
    const CheckReport rep = detail::run_check(cfg);
    json j{{"bounds", to_json(rep.bounds)},
           {"options", detail::options_json(cfg)},
           {"certified", rep.certified},
           {"verdicts", json::array()}};
    for (const auto& v : rep.verdicts) j["verdicts"].push_back(to_json(v));

    std::ostringstream body;
    if (cfg.format == OutputFormat::json) {
      body << j.dump(2) << '\n';
    } else {
      json meta{{"bounds", j["bounds"]}, {"options", j["options"]}, {"certified", rep.certified}};
      detail::csv_header_block(body, meta);
      write_verdicts_csv(body, rep.verdicts);
    }
    out << body.str();
    if (!cfg.out_dir.empty())
      detail::write_file(cfg.out_dir, cfg.format == OutputFormat::json ? "check.json" : "check.csv", body.str());
    return rep.certified ? kExitOk : kExitUncertified;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

inline int cmd_simulate(const CommandArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const ProblemConfig cfg = load_config(args);
    const SimulateSettings& s = cfg.simulate;
    DecayOptions dopts;
    dopts.tail_fraction = s.tail_fraction;
    dopts.drop_ratio = s.drop_ratio;

    auto run = [&](const FuncExpr* phi, const FuncExpr* psi) {
      if (cfg.kind == EquationKind::neutral) {
        NDDEProblem p = cfg.neutral;
        if (phi) p.phi = *phi, p.psi = *psi;
        return integrate(p, s.T, s.dt);
      }
      LogisticProblem p = cfg.logistic;
      if (phi) p.phi = *phi, p.psi = *psi;
      return integrate_logistic(p, s.T, s.dt);
    };
    if (cfg.kind == EquationKind::logistic) dopts.center = cfg.logistic.K;

    json runs = json::array();
    bool all_decay = true;
    auto record = [&](const Trajectory& tr, const std::string& label) {
      json j{{"run", label}, {"status", to_string(tr.status)}, {"t_end", tr.t_end()}, {"x_end", tr.x.back()}};
      if (tr.stopped_at) j["stopped_at"] = *tr.stopped_at;
      if (tr.ok()) {
        const DecayEstimate d = estimate_decay(tr, dopts);
        j["decay"] = to_json(d);
        all_decay = all_decay && d.verdict == DecayVerdict::decaying;
      } else {
        all_decay = false;
      }
      if (cfg.kind == EquationKind::logistic) {
        j["within_1pct_of_K"] = tr.ok() && std::abs(tr.x.back() - cfg.logistic.K) <= 0.01 * cfg.logistic.K;
      }
      runs.push_back(std::move(j));
    };

    const Trajectory main = run(nullptr, nullptr);
    record(main, "config");
    std::mt19937_64 rng(s.seed);
    for (int i = 0; i < s.random_histories; ++i) {
      auto [phi, psi] = random_history(rng);
      if (cfg.kind == EquationKind::logistic) {
        // perturbation of the equilibrium, 5% of K at most
        phi = FuncExpr::constant(cfg.logistic.K) + FuncExpr::constant(0.05 * cfg.logistic.K) * phi;
        psi = FuncExpr::constant(0.05 * cfg.logistic.K) * psi;
      }
      record(run(&phi, &psi), fmt::format("random-{}", i));
    }

    json report{{"T", s.T}, {"dt", s.dt}, {"seed", s.seed}, {"runs", runs}, {"all_decaying", all_decay}};
    std::ostringstream body;
    if (cfg.format == OutputFormat::json) {
      body << report.dump(2) << '\n';
    } else {
      detail::csv_header_block(body, json{{"T", s.T}, {"dt", s.dt}, {"seed", s.seed}});
      body << "run,status,t_end,x_end,gamma_est,M_est,fit_residual,verdict\n";
      for (const auto& j : runs) {
        const bool has = j.contains("decay");
        body << fmt::format("{},{},{},{},{},{},{},{}\n", j["run"].get<std::string>(), j["status"].get<std::string>(),
                            j["t_end"].get<double>(), j["x_end"].get<double>(),
                            has ? j["decay"]["gamma_est"].dump() : "", has ? j["decay"]["M_est"].dump() : "",
                            has ? j["decay"]["fit_residual"].dump() : "",
                            has ? j["decay"]["verdict"].get<std::string>() : "");
      }
    }
    out << body.str();
    if (!cfg.out_dir.empty()) {
      std::ostringstream traj;
      write_trajectory_csv(traj, main);
      detail::write_file(cfg.out_dir, "trajectory.csv", traj.str());
      detail::write_file(cfg.out_dir, cfg.format == OutputFormat::json ? "simulate.json" : "simulate.csv", body.str());
    }
    return all_decay ? kExitOk : kExitUncertified;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

/// Template for sweeps: re-reads the configuration with the swept parameter bound.
inline SweepTemplate make_template(const Tree& tree, const std::string& parameter) {
  return [tree, parameter](double value) {
    const ProblemConfig cfg = parse_config(tree, {{parameter, value}});
    return detail::run_check(cfg).verdicts;
  };
}

inline int cmd_sweep(const CommandArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const Tree tree = read_tree(args.config_path);
    const ProblemConfig cfg = load_config(args);
    if (!cfg.sweep) throw ConfigError("config has no [sweep] section");
    const SweepSettings& sw = *cfg.sweep;
    SweepSpec spec{sw.parameter, sw.lo, sw.hi, sw.criteria, sw.tol, sw.scan_points};
    validate(spec);
    const SweepTemplate tmpl = make_template(tree, sw.parameter);

    json summary{{"parameter", sw.parameter},
                 {"range", {sw.lo, sw.hi}},
                 {"tol", sw.tol},
                 {"scan_points", sw.scan_points},
                 {"options", detail::options_json(cfg)},
                 {"thresholds", json::array()}};
    for (const auto& r : find_threshold(spec, tmpl)) summary["thresholds"].push_back(to_json(r));
    out << summary.dump(2) << '\n';

    if (!cfg.out_dir.empty()) {
      std::ostringstream grid;
      write_sweep_csv(grid, sw.parameter, sweep_grid(spec, tmpl));
      detail::write_file(cfg.out_dir, "sweep_grid.csv", grid.str());
      detail::write_file(cfg.out_dir, "thresholds.json", summary.dump(2) + "\n");
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

inline int cmd_fundamental(const CommandArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const ProblemConfig cfg = load_config(args);
    if (cfg.kind != EquationKind::neutral) throw ConfigError("fundamental needs a neutral equation");
    const double s = args.s.value_or(cfg.neutral.t0);
    const Trajectory tr = fundamental(cfg.neutral, s, cfg.simulate.T, cfg.simulate.dt);

    json report{{"s", s}, {"T", cfg.simulate.T}, {"dt", cfg.simulate.dt}, {"status", to_string(tr.status)}};
    if (tr.ok()) {
      DecayOptions dopts;
      dopts.tail_fraction = cfg.simulate.tail_fraction;
      dopts.drop_ratio = cfg.simulate.drop_ratio;
      report["decay"] = to_json(estimate_decay(tr, dopts));
    }
    std::ostringstream traj;
    write_trajectory_csv(traj, tr);
    if (cfg.out_dir.empty())
      out << traj.str();
    else
      detail::write_file(cfg.out_dir, "fundamental.csv", traj.str());
    err << report.dump() << '\n';
    return tr.ok() ? kExitOk : kExitUncertified;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace nstab::cli
