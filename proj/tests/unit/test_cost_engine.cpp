#include <cmath>

#include <gtest/gtest.h>

#include "growthopt/cost_engine.hpp"
#include "growthopt/rng.hpp"
#include "oracles.hpp"

using namespace growthopt;

namespace {

using Vec = std::vector<double>;

Vec random_simplex(Rng& rng, int d) {
  Vec p(d);
  double s = 0.0;
  for (double& v : p) s += (v = -std::log(1.0 - rng.uniform()));
  for (double& v : p) v /= s;
  return p;
}

CostSpec two(double c, double C = 0.0, CostVariant v = CostVariant::additive) {
  return CostSpec::uniform(2, c, C, v);
}

}  // namespace

TEST(CostEngine, ProportionalCostExamples) {
  const CostSpec s = two(0.01);
  EXPECT_DOUBLE_EQ(proportional_cost(s, Vec{0.3, 0.7}, Vec{0.3, 0.7}), 0.0);
  EXPECT_NEAR(proportional_cost(s, Vec{1, 0}, Vec{0, 1}), 0.02, 1e-15);
  CostSpec asym;
  asym.buy_rates = {0.01, 0.03};
  asym.sell_rates = {0.02, 0.04};
  // Sell 0.5 of asset 1 (rate 0.02), buy 0.3 of asset 2 (rate 0.03).
  EXPECT_NEAR(proportional_cost(asym, Vec{1, 0}, Vec{0.5, 0.3}), 0.5 * 0.02 + 0.3 * 0.03, 1e-15);
  EXPECT_THROW(proportional_cost(s, Vec{0.7, 0.7}, Vec{0.5, 0.5}), DomainError);
}

TEST(CostEngine, ProportionalCostSubadditive) {
  Rng rng(1);
  for (int k = 0; k < 2000; ++k) {
    CostSpec s;
    for (int i = 0; i < 3; ++i) {
      s.buy_rates.push_back(0.1 * rng.uniform());
      s.sell_rates.push_back(0.1 * rng.uniform());
    }
    const Vec a = random_simplex(rng, 3), b = random_simplex(rng, 3), c = random_simplex(rng, 3);
    EXPECT_LE(proportional_cost(s, a, c), proportional_cost(s, a, b) + proportional_cost(s, b, c) + 1e-15);
  }
}

TEST(CostEngine, ProjectionAndDiamond) {
  EXPECT_EQ(project_g(Vec{0.2, 0.2}), (Vec{0.5, 0.5}));
  const Vec p = project_g(Vec{0.3, 0.6, 0.1});
  EXPECT_NEAR(p[0], 0.3, 1e-15);
  EXPECT_THROW(project_g(Vec{0.0, 0.0}), DomainError);
  const Vec d = diamond(Vec{0.5, 0.5}, Vec{2.0, 1.0});
  EXPECT_NEAR(d[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(diamond(Vec{0.25, 0.75}, Vec{1.0, 1.0}), (Vec{0.25, 0.75}));
  EXPECT_EQ(diamond(Vec{0.0, 1.0}, Vec{3.0, 0.5}), (Vec{0.0, 1.0}));
}

TEST(CostEngine, SolveEHandExamples) {
  EXPECT_EQ(solve_e(two(0.01), Vec{0.4, 0.6}, Vec{0.4, 0.6}, 1.0), 1.0);
  EXPECT_NEAR(solve_e(two(0.01), Vec{1, 0}, Vec{0, 1}, 1.0), 0.99 / 1.01, 1e-15);
  EXPECT_NEAR(solve_e(two(0.01, 1.0), Vec{1, 0}, Vec{0, 1}, 100.0), 0.98 / 1.01, 1e-15);
  EXPECT_EQ(solve_e(two(0.01, 1.0), Vec{1, 0}, Vec{0, 1}, 0.5), 0.0);
  EXPECT_NEAR(solve_e_prop(two(0.01, 1.0), Vec{1, 0}, Vec{0, 1}), 0.99 / 1.01, 1e-15);
  EXPECT_EQ(solve_e_prop(two(0.2), Vec{0.1, 0.9}, Vec{0.1, 0.9}), 1.0);
}

TEST(CostEngine, SolveEMatchesBisectionOracle) {
  Rng rng(2);
  for (int k = 0; k < 5000; ++k) {
    const int d = 2 + k % 4;
    CostSpec s;
    for (int i = 0; i < d; ++i) {
      s.buy_rates.push_back(0.2 * rng.uniform());
      s.sell_rates.push_back(0.2 * rng.uniform());
    }
    s.fixed = rng.uniform();
    s.variant = k % 2 ? CostVariant::max : CostVariant::additive;
    Vec pm = random_simplex(rng, d), pi = random_simplex(rng, d);
    if (k % 7 == 0) pi[0] = 0.0, pi = project_g(pi);
    const double x = std::exp(6.0 * (rng.uniform() - 0.3));
    const double e = solve_e(s, pm, pi, x);
    EXPECT_NEAR(e, oracle::bisect_e(s, pm, pi, x), 1e-12);
    EXPECT_NEAR(e, solve_e_bisect(s, pm, pi, x), 1e-12);
    if (e > 0) EXPECT_NEAR(oracle::budget(s, pm, pi, x, e), 1.0, 1e-12);
    EXPECT_NEAR(solve_e_prop(s, pm, pi), oracle::bisect_e(s, pm, pi, x, false), 1e-12);
  }
}

TEST(CostEngine, MaxVariantIsMinOfProportionalAndFixedBranch) {
  Rng rng(3);
  for (int k = 0; k < 2000; ++k) {
    const CostSpec s = two(0.05 * rng.uniform(), rng.uniform(), CostVariant::max);
    const Vec pm = random_simplex(rng, 2), pi = random_simplex(rng, 2);
    const double x = 0.5 + 5 * rng.uniform();
    const double expected = std::max(0.0, std::min(solve_e_prop(s, pm, pi), 1.0 - s.fixed / x));
    EXPECT_NEAR(solve_e(s, pm, pi, x), expected, 1e-12);
  }
}

TEST(CostEngine, EtaArithmetic) {
  EXPECT_DOUBLE_EQ(eta_of(0.0), 0.0);
  EXPECT_NEAR(eta_of(0.01), -std::log(1.0 - 0.02 / 0.99), 1e-15);
  EXPECT_NEAR(std::exp(-eta_of(0.01)), 0.97979797979798, 1e-12);
  EXPECT_NEAR(eta_at(two(0.01), 1e300), eta_of(0.01), 1e-15);
  EXPECT_GT(eta_at(two(0.01, 1.0), 100.0), eta_of(0.01));
}

TEST(CostEngine, MinDiminutionIsAttainedAtVertices) {
  Rng rng(4);
  CostSpec s;
  s.buy_rates = {0.01, 0.03, 0.02};
  s.sell_rates = {0.04, 0.005, 0.02};
  s.fixed = 0.3;
  for (double x : {-1.0, 0.5, 1.0, 10.0}) {
    const bool fixed = x > 0;
    const double lo = min_diminution(s, x);
    EXPECT_NEAR(lo, oracle::min_vertex_e(s, fixed ? x : 1.0, fixed), 1e-12);
    for (int k = 0; k < 3000; ++k) {
      const Vec pm = random_simplex(rng, 3), pi = random_simplex(rng, 3);
      EXPECT_GE((fixed ? solve_e(s, pm, pi, x) : solve_e_prop(s, pm, pi)) + 1e-14, lo);
    }
  }
}

TEST(CostEngine, AffordabilityThresholdMatchesClosedForm) {
  CostSpec s;
  s.buy_rates = {0.01, 0.03};
  s.sell_rates = {0.04, 0.005};
  s.fixed = 0.7;
  EXPECT_NEAR(affordability_threshold(s), oracle::x_star_closed(s), 1e-12);
  s.variant = CostVariant::max;
  EXPECT_NEAR(affordability_threshold(s), oracle::x_star_closed(s), 1e-12);
  s.fixed = 0.0;
  EXPECT_DOUBLE_EQ(affordability_threshold(s), 0.0);
}

TEST(CostEngine, ConstantsInvariants) {
  const CostSpec s = two(0.001, 0.5);
  const double p_hat = 0.5 * (std::log(1.015) + std::log(1.005));
  const CostConstants c = cost_constants(s, p_hat);
  EXPECT_NEAR(std::exp(-c.eta), 1.0 - 2.0 * 0.001 / 0.999, 1e-12);
  EXPECT_NEAR(c.M_star, c.M * std::exp(c.eta_M), 1e-12 * c.M_star);
  EXPECT_GT(c.eta_M, c.eta);
  EXPECT_LT(c.eta_M, p_hat);
  EXPECT_GT(c.M, c.x_star);
  EXPECT_NEAR(c.x_star, 0.5 / 0.999, 1e-12);
  // eta_M decreases to eta.
  double prev = eta_at(s, c.M);
  for (double M : {2 * c.M, 10 * c.M, 1e6 * c.M}) {
    const double e = eta_at(s, M);
    EXPECT_LT(e, prev);
    EXPECT_GT(e, c.eta);
    prev = e;
  }
}

TEST(CostEngine, ConstantsWithoutFixedCost) {
  const CostConstants c = cost_constants(two(0.001), 0.01);
  EXPECT_DOUBLE_EQ(c.x_star, 0.0);
  EXPECT_DOUBLE_EQ(c.eta_M, c.eta);
  EXPECT_DOUBLE_EQ(cost_constants(two(0.0), 0.01).eta, 0.0);
}

TEST(CostEngine, ConstantsRejectCostAboveFloor) {
  EXPECT_THROW(cost_constants(two(0.4, 0.5), 0.01), AssumptionError);
  EXPECT_THROW(cost_constants(two(0.004), 0.005), AssumptionError);
}

TEST(CostEngine, GeneralCostCheckExamples) {
  const CostSpec add = two(0.002, 0.5);
  EXPECT_TRUE(general_cost_check(add, share_space_cost(add), add, 2000).passed());
  CostSpec mx = add;
  mx.variant = CostVariant::max;
  EXPECT_TRUE(general_cost_check(add, share_space_cost(mx), add, 2000).passed());
  const ShareCost zero = [](std::span<const double>, std::span<const double>, std::span<const double>) { return 0.0; };
  const CostCheckReport r = general_cost_check(add, zero, add, 2000);
  EXPECT_FALSE(r.passed());
  EXPECT_GT(r.lower_violations, 0);
}

TEST(CostEngine, ShareSpaceCostHandExample) {
  const CostSpec s = two(0.01, 1.0);
  const ShareCost c = share_space_cost(s);
  // Prices (2, 5): sell 10 shares of asset 1 (value 20), buy 3 of asset 2 (value 15).
  const double v = c(Vec{10, 0}, Vec{0, 3}, Vec{2, 5});
  EXPECT_NEAR(v, 0.01 * 20 + 0.01 * 15 + 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(c(Vec{1, 2}, Vec{1, 2}, Vec{2, 5}), 1.0);
}

TEST(CostEngine, SpecValidationAndParsing) {
  CostSpec s = two(0.01);
  EXPECT_NO_THROW(s.validate());
  s.buy_rates[0] = 1.0;
  EXPECT_THROW(s.validate(), DomainError);
  s = two(0.01, -1.0);
  EXPECT_THROW(s.validate(), DomainError);
  EXPECT_EQ(cost_variant_from_string("max"), CostVariant::max);
  EXPECT_EQ(to_string(CostVariant::additive), "additive");
  EXPECT_THROW(cost_variant_from_string("other"), DomainError);
}
