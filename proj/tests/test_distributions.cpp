#include <catch2/catch_amalgamated.hpp>

#include "bt/distributions.hpp"
#include "bt/rng.hpp"

#include <cmath>
#include <numbers>

using bt::StrengthModel;
using Catch::Approx;

namespace {

const double kLn2 = std::numbers::ln2;

std::vector<StrengthModel> all_models() {
  return {StrengthModel::exponential(1.0),
          StrengthModel::exponential(2.0),
          StrengthModel::uniform01(),
          StrengthModel::beta(1.0, 0.5),
          StrengthModel::beta(2.0, 1.5),
          StrengthModel::arcsine(),
          StrengthModel::pointmass(1.0),
          StrengthModel::pointmass(2.5),
          StrengthModel::finite_mixture({1.0, 0.5}, {0.5, 0.5}),
          StrengthModel::pareto(3.0),
          StrengthModel::exp_of_gaussian(0.0, 1.0),
          StrengthModel::half_gaussian(1.0)};
}

}  // namespace

TEST_CASE("tail values at known points", "[distributions]") {
  CHECK(bt::tail(StrengthModel::exponential(1.0), 0.0) == 1.0);
  CHECK(bt::tail(StrengthModel::uniform01(), 0.25) == Approx(0.75));
  CHECK(bt::tail(StrengthModel::pointmass(1.0), 0.5) == 1.0);
  CHECK(bt::tail(StrengthModel::pointmass(1.0), 1.0) == 0.0);
  CHECK(bt::tail(StrengthModel::pareto(3.0), 2.0) == Approx(0.125));
  CHECK(bt::tail(StrengthModel::arcsine(), 0.5) == Approx(0.5));
  CHECK_THROWS_AS(bt::tail(StrengthModel::uniform01(), -0.1), std::domain_error);
}

TEST_CASE("tail is non-increasing", "[distributions]") {
  bt::Stream rng(7, 0);
  for (const auto& m : all_models()) {
    const double hi = std::isinf(m.support_max()) ? 20.0 : m.support_max();
    double prev_x = 0.0, prev_q = bt::tail(m, 0.0);
    CHECK(prev_q == 1.0);
    for (int i = 1; i <= 200; ++i) {
      const double x = hi * i / 200.0;
      const double q = bt::tail(m, x);
      REQUIRE(q <= prev_q);
      prev_q = q;
      prev_x = x;
    }
  }
}

TEST_CASE("inverse_tail closed forms", "[distributions]") {
  CHECK(bt::inverse_tail(StrengthModel::exponential(1.0), std::exp(-1.0)) == Approx(1.0));
  CHECK(bt::inverse_tail(StrengthModel::uniform01(), 0.3) == Approx(0.7));
  CHECK(bt::inverse_tail(StrengthModel::pointmass(1.0), 0.4) == 1.0);
  CHECK(bt::inverse_tail(StrengthModel::pareto(2.0), 0.25) == Approx(2.0));
  CHECK_THROWS_AS(bt::inverse_tail(StrengthModel::uniform01(), 0.0), std::domain_error);
  CHECK_THROWS_AS(bt::inverse_tail(StrengthModel::uniform01(), 1.0), std::domain_error);
}

TEST_CASE("generalized inverse Galois inequalities", "[distributions][property]") {
  bt::Stream rng(99, 0);
  for (const auto& m : all_models()) {
    for (int i = 0; i < 200; ++i) {
      const double y = rng.next_double();
      const double x = bt::inverse_tail(m, y);
      REQUIRE(bt::tail(m, x) <= y + 1e-12);
    }
    // Q^{-1}(Q(x)) <= x wherever Q(x) is interior.
    const double hi = std::isinf(m.support_max()) ? 10.0 : m.support_max();
    for (int i = 1; i < 50; ++i) {
      const double x = hi * i / 50.0;
      const double q = bt::tail(m, x);
      if (q > 0.0 && q < 1.0) REQUIRE(bt::inverse_tail(m, q) <= x + 1e-9 * std::max(1.0, x));
    }
  }
}

TEST_CASE("sampling: degenerate, uniform mean, mixture fractions", "[distributions]") {
  bt::Stream rng(2024, 0);
  const auto atoms = bt::sample(StrengthModel::pointmass(1.0), 3, rng);
  CHECK(atoms == std::vector<double>{1.0, 1.0, 1.0});

  const int n = 100000;
  const auto u = bt::sample(StrengthModel::uniform01(), n, rng);
  double mean = 0;
  for (double x : u) mean += x;
  mean /= n;
  CHECK(std::abs(mean - 0.5) < 0.005);

  const auto mix = bt::sample(StrengthModel::finite_mixture({1.0, 0.5}, {0.5, 0.5}), n, rng);
  int ones = 0;
  for (double x : mix) {
    REQUIRE((x == 1.0 || x == 0.5));
    ones += x == 1.0;
  }
  CHECK(std::abs(double(ones) / n - 0.5) < 0.005);
}

TEST_CASE("order statistics sort ascending and preserve the multiset", "[distributions]") {
  CHECK(bt::order_statistics({3, 1, 2}) == std::vector<double>{1, 2, 3});
  CHECK(bt::order_statistics({1, 1}) == std::vector<double>{1, 1});

  bt::Stream rng(5, 0);
  auto values = bt::sample(StrengthModel::exponential(1.0), 1000, rng);
  auto sorted = bt::order_statistics(values);
  REQUIRE(std::is_sorted(sorted.begin(), sorted.end()));
  auto expected = values;
  std::sort(expected.begin(), expected.end());
  CHECK(sorted == expected);
  CHECK_THROWS_AS(bt::order_statistics({}), std::invalid_argument);
}

TEST_CASE("moments: closed forms", "[distributions]") {
  const auto atom = bt::moments(StrengthModel::pointmass(1.0));
  CHECK(atom.theta_u == Approx(0.25).margin(1e-15));
  CHECK(atom.inv_one_plus == Approx(0.5).margin(1e-15));

  const auto uni = bt::moments(StrengthModel::uniform01());
  CHECK(uni.theta_u == Approx(kLn2 - 0.5).margin(1e-12));
  CHECK(uni.inv_one_plus == Approx(kLn2).margin(1e-12));
  CHECK(uni.mean == Approx(0.5));
  CHECK(uni.second_moment == Approx(1.0 / 3.0));

  const auto mix = bt::moments(StrengthModel::finite_mixture({1.0, 0.5}, {0.5, 0.5}));
  CHECK(mix.theta_u == Approx(17.0 / 72.0).margin(1e-15));
  CHECK(mix.inv_one_plus == Approx(7.0 / 12.0).margin(1e-15));

  const auto exp1 = bt::moments(StrengthModel::exponential(1.0));
  CHECK(exp1.mean == Approx(1.0));
  CHECK(exp1.second_moment == Approx(2.0));
  CHECK(exp1.theta_u == Approx(0.19269472464638815).margin(1e-12));
  CHECK(exp1.inv_one_plus == Approx(0.59634736232319407).margin(1e-12));

  const auto arc = bt::moments(StrengthModel::arcsine());
  CHECK(arc.theta_u == Approx(0.17677669529663688).margin(1e-12));
  CHECK(arc.inv_one_plus == Approx(0.70710678118654752).margin(1e-12));

  CHECK(bt::moments(StrengthModel::pareto(1.5)).second_moment == bt::kInf);
  CHECK(bt::moments(StrengthModel::pareto(0.5)).mean == bt::kInf);
  CHECK(bt::moments(StrengthModel::half_gaussian(1.0)).mean ==
        Approx(std::sqrt(2.0 / std::numbers::pi)));
}

TEST_CASE("moments: quadrature path agrees with closed forms and references",
          "[distributions][quadrature]") {
  // Models whose theta/inv have independent closed forms.
  for (const auto& m :
       {StrengthModel::pointmass(1.0), StrengthModel::uniform01(),
        StrengthModel::finite_mixture({1.0, 0.5}, {0.5, 0.5}), StrengthModel::exponential(1.0),
        StrengthModel::exponential(2.0), StrengthModel::arcsine()}) {
    const auto closed = bt::moments(m);
    CHECK(std::abs(bt::quadrature_theta_u(m) - closed.theta_u) <= 1e-9);
    CHECK(std::abs(bt::quadrature_inv_one_plus(m) - closed.inv_one_plus) <= 1e-9);
  }
  // Reference values for the quadrature-only models (30-digit quadrature).
  CHECK(bt::quadrature_theta_u(StrengthModel::beta(1.0, 0.5)) ==
        Approx(0.21741893010517288).margin(1e-10));
  CHECK(bt::quadrature_inv_one_plus(StrengthModel::beta(1.0, 0.5)) ==
        Approx(0.62322524014023051).margin(1e-10));
  CHECK(bt::quadrature_theta_u(StrengthModel::pareto(3.0)) ==
        Approx(0.23832462503950778).margin(1e-10));
  CHECK(bt::quadrature_inv_one_plus(StrengthModel::pareto(3.0)) ==
        Approx(0.42055845832016407).margin(1e-10));
  CHECK(bt::quadrature_theta_u(StrengthModel::exp_of_gaussian(0.0, 1.0)) ==
        Approx(0.20662096414190704).margin(1e-10));
  CHECK(bt::quadrature_inv_one_plus(StrengthModel::exp_of_gaussian(0.0, 1.0)) ==
        Approx(0.5).margin(1e-10));
  CHECK(bt::quadrature_theta_u(StrengthModel::half_gaussian(1.0)) ==
        Approx(0.20211543919713464).margin(1e-10));
  CHECK(bt::quadrature_inv_one_plus(StrengthModel::half_gaussian(1.0)) ==
        Approx(0.61487053953631786).margin(1e-10));

  // Means cross-check through the same integral transform.
  CHECK(bt::quadrature_mean(StrengthModel::pareto(3.0)) == Approx(1.5).margin(1e-9));
  CHECK(bt::quadrature_mean(StrengthModel::exponential(2.0)) == Approx(0.5).margin(1e-9));

  // Divergent second moment is a distinct failure, not an approximation.
  CHECK_THROWS_AS(bt::quadrature_second_moment(StrengthModel::pareto(1.5)), bt::QuadratureError);
}

TEST_CASE("moment monotonicity under stochastic dominance", "[distributions]") {
  // pointmass(1) dominates the {1, 1/2} mixture, so theta_u is larger.
  const auto strong = StrengthModel::pointmass(1.0);
  const auto weak = StrengthModel::finite_mixture({1.0, 0.5}, {0.5, 0.5});
  for (double x : {0.1, 0.4, 0.6, 0.9, 0.99})
    REQUIRE(bt::tail(weak, x) <= bt::tail(strong, x));
  CHECK(bt::moments(weak).theta_u <= bt::moments(strong).theta_u);
  CHECK(bt::moments(strong).theta_u == Approx(0.25));
  CHECK(bt::moments(weak).theta_u == Approx(17.0 / 72.0));
}

TEST_CASE("empirical theta_u within 4 standard errors", "[distributions][slow]") {
  const auto m = StrengthModel::uniform01();
  bt::Stream rng(31337, 0);
  const std::size_t n = 1000000;
  double sum = 0, sumsq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = bt::inverse_tail(m, rng.next_double());
    const double g = u / ((1 + u) * (1 + u));
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean - bt::moments(m).theta_u) <= 4 * se);
}

TEST_CASE("assumption (A) slope diagnostics", "[distributions]") {
  const auto uni = bt::check_assumption_a(StrengthModel::uniform01(), 1.0);
  CHECK(uni.slope == Approx(1.0).margin(1e-9));
  CHECK(uni.pass);

  const auto arc = bt::check_assumption_a(StrengthModel::arcsine(), 0.5);
  CHECK(std::abs(arc.slope - 0.5) < 0.1);
  CHECK(arc.pass);

  const auto atom = bt::check_assumption_a(StrengthModel::pointmass(1.0), 0.0);
  CHECK(atom.slope == Approx(0.0).margin(1e-12));
  CHECK(atom.pass);

  const auto b = bt::check_assumption_a(StrengthModel::beta(1.0, 0.5), 0.5);
  CHECK(b.pass);

  CHECK_THROWS_AS(bt::check_assumption_a(StrengthModel::exponential(1.0), 1.0),
                  std::invalid_argument);
}

TEST_CASE("alpha metadata enforces unit support", "[distributions]") {
  auto m = StrengthModel::pointmass(2.0);
  CHECK_FALSE(m.alpha().has_value());
  CHECK_THROWS_WITH(m.set_alpha(0.0), Catch::Matchers::ContainsSubstring("support_max"));
  CHECK(StrengthModel::uniform01().alpha() == 1.0);
  CHECK(StrengthModel::arcsine().alpha() == 0.5);
  CHECK(StrengthModel::beta(1.0, 0.5).alpha() == 0.5);
  CHECK_FALSE(StrengthModel::beta(1.0, 2.5).alpha().has_value());
  CHECK(StrengthModel::pointmass(1.0).alpha() == 0.0);
  CHECK(StrengthModel::finite_mixture({1.0, 0.5}, {0.5, 0.5}).alpha() == 0.0);
}

TEST_CASE("convexity diagnostics", "[distributions]") {
  {
    const auto m = StrengthModel::exponential(1.0);
    const auto grid = bt::convexity_grid(m, 1.0);
    CHECK(bt::check_convexity(m, 0.25, 1.0, grid).pass);
  }
  {
    const auto m = StrengthModel::pareto(3.0);
    const auto grid = bt::convexity_grid(m, 2.0);
    CHECK(bt::check_convexity(m, 0.1, 2.0, grid).pass);
  }
  {
    const auto m = StrengthModel::beta(1.0, 1.0);  // uniform01 in beta form
    std::vector<double> grid(100);
    for (int i = 0; i < 100; ++i) grid[i] = 0.5 + 0.5 * i / 99.0;
    const auto report = bt::check_convexity(m, 0.25, 0.5, grid);
    CHECK_FALSE(report.pass);
  }
  CHECK(bt::check_convexity(StrengthModel::exponential(1.0)).pass);
  std::vector<double> tiny{1.0, 2.0};
  CHECK_THROWS_AS(bt::check_convexity(StrengthModel::exponential(1.0), 0.25, 1.0, tiny),
                  std::invalid_argument);
}

TEST_CASE("model construction rejects bad parameters", "[distributions]") {
  CHECK_THROWS_AS(StrengthModel::exponential(0.0), std::invalid_argument);
  CHECK_THROWS_AS(StrengthModel::pointmass(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(StrengthModel::finite_mixture({1.0, 0.5}, {0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(StrengthModel::finite_mixture({1.0, -0.5}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(StrengthModel::finite_mixture({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(StrengthModel::beta(1.0, 0.0), std::invalid_argument);
}
