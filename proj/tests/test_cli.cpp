#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nstab/cli.hpp"

using namespace nstab;
using namespace nstab::cli;
namespace fs = std::filesystem;

namespace {

const std::string kExample2 = R"(
[equation]
kind = neutral
a = 0.6
b = r*(1+0.1*sin(t))
g_lag = 0.1
h_lag = 0.95+0.05*sin(t)
h_lag_min = 0.9
h_lag_max = 1
phi = 1

[params]
r = R

[simulate]
T = 100
dt = 0.01
random_histories = 3
seed = 7

[sweep]
parameter = r
lo = 0
hi = 1
criteria = THM1_A,THM1_B
)";

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "nstab_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, std::string text, const std::string& r = "0.2") {
  if (const auto pos = text.find("r = R"); pos != std::string::npos) text.replace(pos, 5, "r = " + r);
  const fs::path path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CommandArgs with(std::string path) {
  CommandArgs a;
  a.config_path = std::move(path);
  return a;
}

struct Run {
  int code;
  std::string out, err;
};

template <typename F>
Run run(F cmd, const CommandArgs& args) {
  std::ostringstream out, err;
  const int code = cmd(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config parsing", "[cli]") {
  const ProblemConfig cfg = parse_config(read_tree(write_config("parse.ini", kExample2)));
  CHECK(cfg.kind == EquationKind::neutral);
  CHECK(cfg.params.at("r") == 0.2);
  CHECK(cfg.neutral.a(3.0) == 0.6);
  CHECK(cfg.neutral.h.declared_max == 1.0);
  CHECK(cfg.simulate.random_histories == 3);
  REQUIRE(cfg.sweep);
  CHECK(cfg.sweep->criteria.size() == 2);

  const ProblemConfig bound = parse_config(read_tree(write_config("parse.ini", kExample2)), {{"r", 0.5}});
  CHECK(bound.neutral.b(0.0) == 0.5);

  SECTION("errors") {
    const std::string bad_kind = write_config("bad_kind.ini", "[equation]\nkind = nonlinear\n");
    CHECK_THROWS_AS(parse_config(read_tree(bad_kind)), ConfigError);
    const std::string bad_expr = write_config("bad_expr.ini", "[equation]\na = 0.6*\nb = 1\n");
    CHECK_THROWS(parse_config(read_tree(bad_expr)));
    CHECK_THROWS(read_tree((scratch() / "missing.ini").string()));
  }
}

TEST_CASE("check command", "[cli]") {
  SECTION("certified") {
    const Run r = run(cmd_check, with(write_config("c1.ini", kExample2, "0.2")));
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("# bounds.A0 = 0.6") != std::string::npos);
    CHECK(r.out.find("THM1_A") != std::string::npos);
  }
  SECTION("uncertified") {
    const Run r = run(cmd_check, with(write_config("c2.ini", kExample2, "0.5")));
    CHECK(r.code == kExitUncertified);
  }
  SECTION("non-contraction") {
    const Run r = run(cmd_check, with(write_config("c3.ini", "[equation]\na = 1.2\nb = 0.5\ng_lag = 0.5\nh_lag = 1\n")));
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("A0 = 1.2 >= 1") != std::string::npos);
  }
  SECTION("overrides are echoed") {
    const Run r = run(cmd_check, with(write_config("c4.ini", kExample2 + "\n[bounds]\nB0 = 0.3\n")));
    CHECK(r.out.find("# bounds.B0 = 0.3") != std::string::npos);
  }
  SECTION("json to a directory") {
    const fs::path dir = scratch() / "check_json";
    fs::remove_all(dir);
    CommandArgs args = with(write_config("c5.ini", kExample2));
    args.format = "json";
    args.out_dir = dir.string();
    const Run r = run(cmd_check, args);
    CHECK(r.code == kExitOk);
    const json j = json::parse(slurp(dir / "check.json"));
    CHECK(j["certified"].get<bool>());
    CHECK(j["verdicts"].size() >= 4);
  }
  SECTION("bad format flag") {
    CommandArgs args = with(write_config("c6.ini", kExample2));
    args.format = "xml";
    CHECK(run(cmd_check, args).code == kExitConfig);
  }
}

TEST_CASE("simulate command", "[cli]") {
  SECTION("ODE decays at rate 1") {
    CommandArgs args = with(write_config("s1.ini", "[equation]\nb = 1\nphi = 1\npsi = -1\n[simulate]\nT = 10\ndt = 0.001\n"));
    args.format = "json";
    const Run r = run(cmd_simulate, args);
    REQUIRE(r.code == kExitOk);
    const json j = json::parse(r.out);
    CHECK(std::abs(j["runs"][0]["decay"]["gamma_est"].get<double>() - 1.0) < 0.05);
  }
  SECTION("unstable run") {
    const Run r = run(cmd_simulate, with(write_config("s2.ini", "[equation]\nb = 3\nh_lag = 1\nphi = 1\n[simulate]\nT = 100\n")));
    CHECK(r.code == kExitUncertified);
    CHECK(r.out.find("diverged") != std::string::npos);
  }
  SECTION("logistic converges") {
    const std::string text =
        "[equation]\nkind = logistic\nr = 0.2\nrho = 4\ng_lag = 0.9\nh_lag = 0.9\nphi = 1.1\n[simulate]\nT = 200\n";
    CommandArgs args = with(write_config("s3.ini", text));
    args.format = "json";
    const Run r = run(cmd_simulate, args);
    const json j = json::parse(r.out);
    CHECK(j["runs"][0]["within_1pct_of_K"].get<bool>());
  }
  SECTION("same seed, same bytes") {
    const std::string cfg = write_config("s4.ini", kExample2);
    CommandArgs a = with(cfg), b = with(cfg);
    a.out_dir = (scratch() / "seed_a").string();
    b.out_dir = (scratch() / "seed_b").string();
    a.seed = b.seed = 11;
    a.horizon = b.horizon = 30.0;
    run(cmd_simulate, a);
    run(cmd_simulate, b);
    CHECK(slurp(fs::path(*a.out_dir) / "simulate.csv") == slurp(fs::path(*b.out_dir) / "simulate.csv"));
    CHECK(slurp(fs::path(*a.out_dir) / "trajectory.csv") == slurp(fs::path(*b.out_dir) / "trajectory.csv"));

    CommandArgs c = with(cfg);
    c.seed = 12;
    c.horizon = 30.0;
    CHECK(run(cmd_simulate, c).out != run(cmd_simulate, a).out);
  }
}

TEST_CASE("sweep command", "[cli]") {
  SECTION("example family") {
    const fs::path dir = scratch() / "sweep";
    CommandArgs args = with(write_config("w1.ini", kExample2));
    args.out_dir = dir.string();
    const Run r = run(cmd_sweep, args);
    REQUIRE(r.code == kExitOk);
    const json j = json::parse(r.out);
    CHECK(std::abs(j["thresholds"][0]["threshold"].get<double>() - 0.30730) < 1e-4);
    CHECK(fs::exists(dir / "sweep_grid.csv"));
    CHECK(fs::exists(dir / "thresholds.json"));
  }
  SECTION("logistic delay sweep") {
    const std::string text =
        "[equation]\nkind = logistic\nr = 0.2\nrho = 4\ng_lag = tau\nh_lag = tau\n[params]\ntau = 1\n"
        "[sweep]\nparameter = tau\nlo = 0.5\nhi = 1.5\ncriteria = LOG_COR\n";
    const Run r = run(cmd_sweep, with(write_config("w2.ini", text)));
    REQUIRE(r.code == kExitOk);
    const json j = json::parse(r.out);
    CHECK(std::abs(j["thresholds"][0]["threshold"].get<double>() - 1.0943) < 1e-3);
  }
  SECTION("empty range") {
    std::string text = kExample2;
    text.replace(text.find("\nhi = 1"), 7, "\nhi = 0");
    CHECK(run(cmd_sweep, with(write_config("w3.ini", text))).code == kExitConfig);
  }
  SECTION("missing section") {
    CHECK(run(cmd_sweep, with(write_config("w4.ini", "[equation]\nb = 1\n"))).code == kExitConfig);
  }
}

TEST_CASE("fundamental command", "[cli]") {
  const fs::path dir = scratch() / "fund";
  fs::remove_all(dir);
  CommandArgs args = with(write_config("f1.ini", "[equation]\nb = 1\n[simulate]\nT = 5\ndt = 0.01\n"));
  args.out_dir = dir.string();
  args.s = 1.0;
  const Run r = run(cmd_fundamental, args);
  CHECK(r.code == kExitOk);
  const std::string csv = slurp(dir / "fundamental.csv");
  CHECK(csv.starts_with("t,"));
  CHECK(json::parse(r.err)["s"].get<double>() == 1.0);

  SECTION("logistic is rejected") {
    CommandArgs la = with(write_config("f2.ini", "[equation]\nkind = logistic\nr = 1\n"));
    CHECK(run(cmd_fundamental, la).code == kExitConfig);
  }
}
