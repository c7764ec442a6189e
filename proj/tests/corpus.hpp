#pragma once

// Regression corpus: neutral problems on which at least one criterion
// certifies stability with some room to spare.

#include <string>
#include <vector>

#include "nstab/funcspec.hpp"
#include "nstab/problem.hpp"

namespace corpus {

struct Entry {
  std::string name;
  std::string a, b, g_lag, h_lag;
};

inline nstab::NDDEProblem build(const Entry& e) {
  nstab::NDDEProblem p;
  p.a = nstab::parse(e.a);
  p.b = nstab::parse(e.b);
  p.g = nstab::DelayFunc{nstab::parse(e.g_lag), std::nullopt, std::nullopt};
  p.h = nstab::DelayFunc{nstab::parse(e.h_lag), std::nullopt, std::nullopt};
  p.phi = nstab::FuncExpr::constant(1.0);
  p.psi = nstab::FuncExpr::constant(0.0);
  return p;
}

inline const std::vector<Entry>& entries() {
  static const std::vector<Entry> all = {
      {"retarded-const", "0", "0.5", "0", "1"},
      {"retarded-varlag", "0", "0.8", "0", "0.9+0.1*sin(t)"},
      {"retarded-e-window", "0", "1.2", "0", "1"},
      {"retarded-short", "0", "2", "0", "0.5"},
      {"retarded-varcoef", "0", "1+0.5*sin(t)", "0", "0.5"},
      {"retarded-long", "0", "0.3", "0", "2+sin(t)"},
      {"neutral-light", "0.3", "0.3", "0.2", "1"},
      {"neutral-half", "0.5", "0.2", "0.5", "1"},
      {"example-var", "0.6", "0.2*(1+0.1*sin(t))", "0.1", "0.95+0.05*sin(t)"},
      {"example-const", "0.6", "0.25*(1+0.1*sin(t))", "0.1", "1"},
      {"example-slow", "0.6", "0.1", "0.1", "1"},
      {"varying-a", "0.2+0.1*sin(t)", "0.4", "0.3", "1"},
      {"varying-b", "0.4", "0.5+0.1*cos(2*t)", "0.2", "0.5"},
      {"equal-lags", "0.3", "1", "0.3", "0.3"},
      {"fast", "0.1", "2", "0.1", "0.2"},
      {"g-long", "0.2", "0.5", "1", "1"},
      {"a-oscillating", "0.25+0.25*sin(t)", "0.3", "0.2", "0.5"},
      {"strong-neutral", "0.7", "0.05", "0.1", "2"},
      {"both-varying", "0.4", "0.6", "0.2+0.1*sin(t)", "0.5+0.2*cos(t)"},
      {"unit-lags", "0.5", "0.2", "1", "1"},
      {"mixed-freq", "0.35+0.05*cos(3*t)", "0.7+0.2*sin(0.5*t)", "0.15", "0.4+0.1*sin(2*t)"},
  };
  return all;
}

}  // namespace corpus
