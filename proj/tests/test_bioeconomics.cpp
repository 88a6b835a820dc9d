#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "patrolrsm/bioeconomics.hpp"
#include "oracles.hpp"

using namespace patrolrsm;

namespace {

FisheryParams gs_fishery() { return {0.4, 1.0, 0.0002, 1.0, 1.0, 2e9}; }

}  // namespace

TEST(GrowthRate, LogisticWithoutHarvest) {
  EXPECT_DOUBLE_EQ(growth_rate(0.5, 0.0, gs_fishery()), 0.1);
}

TEST(GrowthRate, ZeroBiomass) {
  EXPECT_EQ(growth_rate(0.0, 1234.0, gs_fishery()), 0.0);
  FisheryParams fp{0.36, 1.0, 0.00015, 0.91, 1.06, 1e9};
  EXPECT_EQ(growth_rate(0.0, 50.0, fp), 0.0);
}

TEST(GrowthRate, BalancedHarvest) {
  EXPECT_NEAR(growth_rate(0.5, 1000.0, gs_fishery()), 0.0, 1e-15);
}

TEST(GrowthRate, AboveCapacityFractionalAlphaThrows) {
  FisheryParams fp{0.36, 1.0, 0.00015, 0.91, 1.06, 1e9};
  EXPECT_THROW(growth_rate(1.2, 0.0, fp), std::domain_error);
  EXPECT_NO_THROW(growth_rate(1.2, 0.0, gs_fishery()));
}

TEST(SteadyState, ZeroEffortIsCapacity) {
  FisheryParams fp{0.36, 2.5, 0.00015, 0.91, 1.06, 1e9};
  EXPECT_EQ(steady_state_biomass(0.0, fp), 2.5);
}

TEST(SteadyState, GordonSchaefer) {
  EXPECT_NEAR(steady_state_biomass(1000.0, gs_fishery()), 0.5, 1e-12);
  EXPECT_EQ(steady_state_biomass(2000.0, gs_fishery()), 0.0);
  EXPECT_EQ(steady_state_biomass(5000.0, gs_fishery()), 0.0);
}

TEST(SteadyState, ClosedFormSweep) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    FisheryParams fp{0.3 + 0.2 * u(rng), 0.5 + u(rng), 1e-4 + 2e-4 * u(rng), 1.0, 1.0, 1e9};
    const double F = 1.2 * fp.r / fp.q * u(rng);
    const double expected = fp.Z * std::max(0.0, 1.0 - fp.q * F / fp.r);
    const double got = steady_state_biomass(F, fp);
    if (expected == 0.0) {
      EXPECT_EQ(got, 0.0);
    } else {
      EXPECT_NEAR(got, expected, 1e-9 * expected);
    }
  }
}

TEST(SteadyState, GridScanOracle) {
  FisheryParams fp{0.36, 1.0, 0.00015, 0.91, 1.06, 1e9};
  const double oracle = test_oracles::largest_root_by_scan(500.0, fp, 1000000);
  ASSERT_GT(oracle, 0.0);
  EXPECT_NEAR(steady_state_biomass(500.0, fp), oracle, 1e-10);
}

TEST(SteadyState, LargestRootWhenGammaBelowOne) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    FisheryParams fp{0.3 + 0.2 * u(rng), 1.0, 1e-4 + 2e-4 * u(rng), 0.5 + u(rng), 0.5 + u(rng), 1e9};
    const double F = 1.5 * fp.r / fp.q * u(rng);
    const double oracle = test_oracles::largest_root_by_scan(F, fp, 200000);
    EXPECT_NEAR(steady_state_biomass(F, fp), oracle, 1e-9) << "draw " << i;
  }
}

TEST(SteadyState, RootAndMonotonicity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    FisheryParams fp{0.3 + 0.2 * u(rng), 1.0, 1e-4 + 2e-4 * u(rng), 0.5 + u(rng), 0.5 + u(rng), 1e9};
    double previous = fp.Z;
    for (int j = 0; j <= 50; ++j) {
      const double F = 2.0 * fp.r / fp.q * j / 50.0;
      const double x = steady_state_biomass(F, fp);
      EXPECT_LE(x, previous + 1e-12);
      previous = x;
      if (x > 0.0) EXPECT_NEAR(growth_rate(x, F, fp), 0.0, 1e-8);
    }
  }
}

TEST(UnitCost, Formula) {
  CostParams cp{141995.48, 141995.48, 579.56, 451.23, 257.6975, 257.6975};
  EXPECT_NEAR(unit_cost(0.0, 100.0, cp, Side::Blue), 199951.48, 1e-6);
  EXPECT_EQ(unit_cost(0.0, 0.0, cp, Side::Red), cp.c_R);
  EXPECT_EQ(unit_cost(300.0, 100.0, cp, Side::Blue), cp.c_B);
  EXPECT_NEAR(unit_cost(10.0, 40.0, cp, Side::Red), cp.c_R + 451.23 * 40 - 257.6975 * 10, 1e-6);
  EXPECT_THROW(unit_cost(-1.0, 0.0, cp, Side::Blue), std::invalid_argument);
}

TEST(UnitCost, Monotone) {
  CostParams cp{1e5, 1.2e5, 400, 300, 175, 175};
  for (Side s : {Side::Blue, Side::Red}) {
    for (int a = 0; a < 20; ++a) {
      for (int b = 0; b < 20; ++b) {
        const double own = 10.0 * a, rival = 10.0 * b;
        EXPECT_GE(unit_cost(own, rival, cp, s), cp.base_cost(s));
        EXPECT_LE(unit_cost(own, rival, cp, s), unit_cost(own, rival + 10, cp, s));
        EXPECT_GE(unit_cost(own, rival, cp, s), unit_cost(own + 10, rival, cp, s));
      }
    }
  }
}

TEST(FisheryProfit, ClosedFormChain) {
  CostParams cp{200000, 200000, 0, 0, 0, 0};
  const double profit = fishery_profit({400, 200}, 0, 0, gs_fishery(), cp, Side::Blue);
  EXPECT_NEAR(profit, 3.2e7, 1e-3);
}

TEST(FisheryProfit, ZeroEffortIsZero) {
  CostParams cp{200000, 150000, 500, 400, 200, 200};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    FisheryParams fp{0.3 + 0.2 * u(rng), 1.0, 1e-4 + 2e-4 * u(rng), 0.5 + u(rng), 0.5 + u(rng), 1e9 + 2e9 * u(rng)};
    EXPECT_EQ(fishery_profit({0.0, 3000 * u(rng)}, 100 * u(rng), 100 * u(rng), fp, cp, Side::Blue), 0.0);
    EXPECT_EQ(fishery_profit({3000 * u(rng), 0.0}, 100 * u(rng), 100 * u(rng), fp, cp, Side::Red), 0.0);
  }
}

TEST(FisheryProfit, NegativeProfitKept) {
  CostParams cp{1e9, 1e9, 0, 0, 0, 0};
  EXPECT_LT(fishery_profit({100, 0}, 0, 0, gs_fishery(), cp, Side::Blue), 0.0);
}

TEST(Allocation, Validation) {
  EXPECT_NO_THROW(Allocation({100, 200, 300}, 600));
  EXPECT_THROW(Allocation({100, 200, 290}, 600), std::invalid_argument);
  EXPECT_THROW(Allocation({-1, 301, 300}, 600), std::invalid_argument);
  const auto a = Allocation::from_weights(std::vector<double>{0.2, 0.3, 0.5}, 600);
  EXPECT_NEAR(a[0], 120, 1e-12);
  EXPECT_NEAR(a[1], 180, 1e-12);
  EXPECT_NEAR(a[2], 300, 1e-12);
}

TEST(Scenario, Validation) {
  Scenario sc;
  sc.fisheries = {gs_fishery()};
  sc.blue_budget = 600;
  sc.red_budget = 1000;
  EXPECT_NO_THROW(sc.validate());
  sc.epsilon = -0.1;
  EXPECT_THROW(sc.validate(), std::invalid_argument);
  sc.epsilon = 0.1;
  sc.fisheries[0].q = 0.0;
  EXPECT_THROW(sc.validate(), std::invalid_argument);
}
