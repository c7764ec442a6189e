#include <catch_amalgamated.hpp>

#include <cmath>

#include "nstab/criteria.hpp"
#include "nstab/sweep.hpp"

using namespace nstab;
using Catch::Matchers::WithinAbs;

namespace {

NDDEProblem example2(double r) {
  NDDEProblem p;
  p.a = FuncExpr::constant(0.6);
  p.b = parse("r*(1+0.1*sin(t))", {{"r", r}});
  p.g = DelayFunc::constant(0.1);
  p.h = DelayFunc{parse("0.95+0.05*sin(t)"), 1.0, 0.9};
  p.phi = FuncExpr::constant(1.0);
  return p;
}

const SweepTemplate kExample2 = [](double r) {
  CheckOptions opts;
  opts.tangzou_companion = true;
  return check_all(example2(r), opts).verdicts;
};

// Satisfied on the given open intervals only.
SweepTemplate stepwise(std::vector<std::pair<double, double>> sets) {
  return [sets](double x) {
    bool in = false;
    for (auto [lo, hi] : sets) in = in || (lo < x && x < hi);
    return std::vector<Verdict>{make_verdict(CriterionId::COR2, in ? 0.0 : 1.0, 0.5)};
  };
}

}  // namespace

TEST_CASE("example family thresholds", "[sweep]") {
  const SweepSpec spec{"r", 0.0, 1.0, {CriterionId::THM1_A, CriterionId::THM1_B}, 1e-6, 64};
  const auto res = find_threshold(spec, kExample2);
  REQUIRE(res.size() == 2);

  // a0 = A0 = 0.6, b0 = 0.9 r, B0 = 1.1 r, tau = 1, sigma = 0.1: lhs is linear in r
  const double slope = 1.1 + 0.1 * 0.6 * 1.21 * 0.4 / (0.16 * 0.9);
  CHECK(res[0].direction == ThresholdKind::satisfied_below);
  CHECK_THAT(*res[0].threshold, WithinAbs(0.4 / slope, 1e-6));
  CHECK(res[0].bracket_verified);

  CHECK(res[1].direction == ThresholdKind::satisfied_inside);
  REQUIRE(res[1].upper);
  CHECK(*res[1].threshold < *res[1].upper);
  CHECK(res[1].bracket_verified);
  CHECK(detail::satisfied_at(kExample2, CriterionId::THM1_B, 0.5 * (*res[1].threshold + *res[1].upper)));
}

TEST_CASE("sweep grid", "[sweep]") {
  const SweepSpec spec{"r",
                       0.0,
                       0.5,
                       {CriterionId::THM1_A, CriterionId::THM1_B, CriterionId::TANGZOU_1, CriterionId::TANGZOU_2},
                       1e-6,
                       50};
  const auto rows = sweep_grid(spec, kExample2);
  REQUIRE(rows.size() == 200);
  CHECK(rows.front().value == 0.01);
  CHECK_THAT(rows.back().value, WithinAbs(0.5, 1e-15));
  auto at = [&rows](double r, CriterionId id) {
    for (const auto& row : rows)
      if (std::abs(row.value - r) < 1e-9 && row.verdict.criterion == id) return row.verdict.satisfied;
    FAIL("missing row");
    return false;
  };
  CHECK(at(0.2, CriterionId::THM1_A));
  CHECK(at(0.2, CriterionId::THM1_B));
  CHECK_FALSE(at(0.2, CriterionId::TANGZOU_1));
  CHECK(at(0.2, CriterionId::TANGZOU_2));
  CHECK_FALSE(at(0.5, CriterionId::THM1_A));

  SECTION("no criteria") {
    const SweepSpec empty{"r", 0.0, 0.5, {}, 1e-6, 50};
    CHECK(sweep_grid(empty, kExample2).empty());
  }
  SECTION("range beyond every threshold") {
    const SweepSpec far{"r", 0.6, 0.9, spec.criteria, 1e-6, 20};
    for (const auto& row : sweep_grid(far, kExample2)) CHECK_FALSE(row.verdict.satisfied);
    for (const auto& res : find_threshold(far, kExample2)) CHECK(res.direction == ThresholdKind::none_in_range);
  }
}

TEST_CASE("threshold shapes", "[sweep]") {
  const SweepSpec spec{"x", 0.0, 1.0, {CriterionId::COR2}, 1e-7, 64};
  SECTION("satisfied throughout") {
    const auto r = find_threshold(spec, stepwise({{-1.0, 2.0}})).front();
    CHECK(r.direction == ThresholdKind::satisfied_throughout);
    CHECK_FALSE(r.threshold);
  }
  SECTION("satisfied above") {
    const auto r = find_threshold(spec, stepwise({{0.3, 2.0}})).front();
    CHECK(r.direction == ThresholdKind::satisfied_above);
    CHECK_THAT(*r.threshold, WithinAbs(0.3, 1e-7));
    CHECK(r.bracket_verified);
  }
  SECTION("non-monotone keeps the scan") {
    const auto r = find_threshold(spec, stepwise({{0.1, 0.2}, {0.5, 0.6}})).front();
    CHECK(r.direction == ThresholdKind::non_monotone);
    CHECK(r.scan.size() == 64);
    CHECK_FALSE(r.threshold);
  }
  SECTION("template without the criterion") {
    const SweepSpec other{"x", 0.0, 1.0, {CriterionId::THM1_A}, 1e-7, 64};
    CHECK_THROWS_AS(find_threshold(other, stepwise({})), std::invalid_argument);
  }
}

TEST_CASE("sweep validation", "[sweep]") {
  CHECK_THROWS_AS(find_threshold({"r", 1.0, 1.0, {CriterionId::THM1_A}, 1e-6, 64}, kExample2), std::invalid_argument);
  CHECK_THROWS_AS(find_threshold({"r", 0.0, 1.0, {CriterionId::THM1_A}, 0.0, 64}, kExample2), std::invalid_argument);
  CHECK_THROWS_AS(sweep_grid({"r", 0.0, 1.0, {CriterionId::THM1_A}, 1e-6, 8}, kExample2), std::invalid_argument);
}
