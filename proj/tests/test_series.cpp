#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "corpus.hpp"
#include "nstab/bounds.hpp"
#include "nstab/series.hpp"

using namespace nstab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("iterated delays", "[series]") {
  const DelayFunc g = DelayFunc::constant(0.25);
  for (std::size_t k = 0; k < 20; ++k) CHECK_THAT(iterated_delay(g, 3.0, k), WithinAbs(3.0 - 0.25 * k, 1e-13));
  CHECK(iterated_delay(DelayFunc::none(), 2.5, 40) == 2.5);

  const DelayFunc v{parse("0.1*(1+0.5*sin(t))"), std::nullopt, std::nullopt};
  auto lag = [](double t) { return 0.1 * (1 + 0.5 * std::sin(t)); };
  const double g1 = 2.0 - lag(2.0);
  const double g2 = g1 - lag(g1);
  const double g3 = g2 - lag(g2);
  CHECK(iterated_delay(v, 2.0, 3) == g3);

  const IteratedDelayCache c = iterate_delays(v, 2.0, 30);
  CHECK(c.depth() == 30);
  CHECK(c[0] == 2.0);
  CHECK(c[3] == g3);
  for (std::size_t k = 1; k <= c.depth(); ++k) {
    CHECK(c[k] <= c[k - 1]);
    CHECK(2.0 - c[k] <= 0.15 * static_cast<double>(k) + 1e-12);
  }
}

TEST_CASE("series depth", "[series]") {
  CHECK(series_depth(0.0, 1.0, 1e-9) == 0);
  const std::size_t J = series_depth(0.6, 1.0, 1e-8);
  CHECK(J >= 37);
  CHECK(std::pow(0.6, J) / 0.4 < 1e-8);
  CHECK(std::pow(0.6, J - 1) / 0.4 >= 1e-8);
  CHECK_THROWS_AS(series_depth(0.9999999, 1.0, 1e-12), std::runtime_error);
  CHECK_THROWS_AS(series_depth(1.0, 1.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(series_depth(0.5, 1.0, 0.0), std::invalid_argument);
  CHECK(series_tail_bound(0.5, 1.0, 3) < series_tail_bound(0.5, 1.0, 2));
}

TEST_CASE("inverse of I - S", "[series]") {
  const DelayFunc g = DelayFunc::constant(0.3);
  SECTION("geometric series") {
    const SeriesResult r = apply_inverse_neutral(FuncExpr::constant(1.0), FuncExpr::constant(0.5), g, 4.0, 1e-10,
                                                 {0.5, 1.0, std::nullopt});
    CHECK_THAT(r.value, WithinAbs(2.0, 1e-10));
    CHECK(r.tail_bound < 1e-10);
  }
  SECTION("a = 0 returns y") {
    const FuncExpr y = parse("sin(t)");
    const SeriesResult r = apply_inverse_neutral(y, FuncExpr::constant(0.0), g, 4.0, 1e-10, {0.0, 1.0, std::nullopt});
    CHECK(r.value == std::sin(4.0));
    CHECK(r.truncation_depth == 0);
    CHECK(r.tail_bound == 0.0);
  }
  SECTION("a = 0.6") {
    const SeriesResult r = apply_inverse_neutral(FuncExpr::constant(1.0), FuncExpr::constant(0.6), g, 4.0, 1e-8,
                                                 {0.6, 1.0, std::nullopt});
    CHECK(r.truncation_depth >= 37);
    CHECK_THAT(r.value, WithinAbs(2.5, 1e-8));
  }
  SECTION("terms before t0 vanish") {
    const SeriesResult r = apply_inverse_neutral_truncated(FuncExpr::constant(1.0), FuncExpr::constant(0.5), g, 0.7, 10,
                                                           {0.5, 1.0, 0.0});
    CHECK_THAT(r.value, WithinAbs(1.0 + 0.5 + 0.25, 1e-15));  // arguments 0.7, 0.4, 0.1, then -0.2 < 0
  }
  SECTION("the result solves z - S z = y") {
    const FuncExpr a = parse("0.3+0.2*sin(t)");
    const FuncExpr y = parse("cos(2*t)");
    const SeriesBounds sb{0.5, 1.0, std::nullopt};
    for (double t : {1.0, 5.0, 9.0}) {
      const double z = apply_inverse_neutral(y, a, g, t, 1e-13, sb).value;
      const double zg = apply_inverse_neutral(y, a, g, g(t), 1e-13, sb).value;
      CHECK_THAT(z - a(t) * zg, WithinAbs(y(t), 1e-12));
    }
  }
}

TEST_CASE("truncation consistency", "[series][property]") {
  const FuncExpr a = parse("0.4+0.3*sin(t)");
  const FuncExpr y = parse("sin(0.7*t)");
  const DelayFunc g{parse("0.2+0.1*cos(t)"), std::nullopt, std::nullopt};
  const SeriesBounds sb{0.7, 1.0, std::nullopt};
  for (std::size_t J : {1, 5, 10, 25, 50}) {
    for (double t : {3.0, 17.0, 41.5}) {
      const SeriesResult r = apply_inverse_neutral_truncated(y, a, g, t, J, sb);
      const SeriesResult r10 = apply_inverse_neutral_truncated(y, a, g, t, J + 10, sb);
      CHECK(std::abs(r.value - r10.value) <= r.tail_bound);
    }
  }
}

TEST_CASE("operator norm bound", "[series][property]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 60.0);
  for (const auto& e : corpus::entries()) {
    const NDDEProblem p = corpus::build(e);
    const ParamBounds pb = extract_bounds(p, {0.0, 200.0}, 20000);
    const SeriesBounds sb{pb.a_max, 1.0, std::nullopt};
    for (const char* text : {"1", "-1", "sin(3*t)", "cos(0.5*t+2)"}) {
      const FuncExpr y = parse(text);
      for (int i = 0; i < 10; ++i) {
        const double v = apply_inverse_neutral(y, p.a, p.g, u(rng), 1e-10, sb).value;
        CHECK(std::abs(v) <= 1.0 / (1.0 - pb.a_max) + 1e-10);
      }
    }
  }
}

TEST_CASE("aggregated coefficient", "[series]") {
  ParamBounds pb;
  pb.a_min = pb.a_max = 0.5;
  pb.b_min = pb.b_max = 1.0;
  const SeriesResult r =
      aggregated_coefficient(FuncExpr::constant(0.5), FuncExpr::constant(1.0), DelayFunc::constant(0.4), 3.0, 1e-14, pb);
  CHECK_THAT(r.value, WithinAbs(2.0, 1e-13));

  ParamBounds zero;
  zero.b_min = 0.5;
  zero.b_max = 1.5;
  const FuncExpr b = parse("1+0.5*sin(t)");
  CHECK(aggregated_coefficient(FuncExpr::constant(0.0), b, DelayFunc::constant(0.4), 3.0, 1e-9, zero).value == b(3.0));

  SECTION("example family at r = 0.2 against direct summation") {
    const FuncExpr a = FuncExpr::constant(0.6);
    const FuncExpr bb = parse("0.2*(1+0.1*sin(t))");
    const DelayFunc g = DelayFunc::constant(0.1);
    ParamBounds p;
    p.a_min = p.a_max = 0.6;
    p.b_min = 0.18;
    p.b_max = 0.22;
    const double v = aggregated_coefficient(a, bb, g, 5.0, 1e-9, p).value;
    double direct = 0.0, w = 1.0, s = 5.0;
    for (int j = 0; j <= 200; ++j, w *= 0.6, s -= 0.1) direct += w * bb(s);
    CHECK_THAT(v, WithinAbs(direct, 1e-9));
    CHECK(v >= 0.45);
    CHECK(v <= 0.55);
  }
  SECTION("b = b0 before t0") {
    ParamBounds p;
    p.a_min = p.a_max = 0.5;
    p.b_min = 1.0;
    p.b_max = 2.0;
    const double v =
        aggregated_coefficient(FuncExpr::constant(0.5), FuncExpr::constant(2.0), DelayFunc::constant(1.0), 0.5, 1e-12, p, 0.0)
            .value;
    CHECK_THAT(v, WithinAbs(2.0 + 0.5 * 1.0 / 0.5, 1e-11));
  }
  SECTION("wrong bounds are detected") {
    ParamBounds p;
    p.a_min = p.a_max = 0.5;
    p.b_min = 0.1;
    p.b_max = 0.5;
    CHECK_THROWS_AS(
        aggregated_coefficient(FuncExpr::constant(0.5), FuncExpr::constant(2.0), DelayFunc::constant(1.0), 3.0, 1e-9, p),
        ConsistencyError);
  }
}

TEST_CASE("aggregated coefficient sandwich on the corpus", "[series][property]") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 150.0);
  for (const auto& e : corpus::entries()) {
    const NDDEProblem p = corpus::build(e);
    const ParamBounds pb = extract_bounds(p, {0.0, 200.0}, 20000);
    for (int i = 0; i < 20; ++i) {
      const double B = aggregated_coefficient(p.a, p.b, p.g, u(rng), 1e-12, pb).value;
      CHECK(B >= pb.b_min / (1.0 - pb.a_min) - 1e-10);
      CHECK(B <= pb.b_max / (1.0 - pb.a_max) + 1e-10);
    }
  }
}

TEST_CASE("delay chain inequalities", "[series][property]") {
  for (const auto& e : corpus::entries()) {
    const NDDEProblem p = corpus::build(e);
    const ParamBounds pb = extract_bounds(p, {0.0, 200.0}, 20000);
    for (double t : {50.0, 73.3, 120.9}) {
      const IteratedDelayCache c = iterate_delays(p.g, t, 50);
      for (std::size_t n = 0; n <= 50; ++n) {
        const double nn = static_cast<double>(n);
        CHECK(t - c[n] <= nn * pb.sigma + 1e-10);
        CHECK(t - p.h(c[n]) <= nn * pb.sigma + pb.tau + 1e-10);
      }
    }
  }
}
