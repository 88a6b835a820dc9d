#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "patrolrsm/equilibrium.hpp"
#include "patrolrsm/optim.hpp"
#include "patrolrsm/scenario_io.hpp"

using namespace patrolrsm;

namespace {

FisheryParams quadratic_fishery() { return {0.4, 1.0, 0.0002, 1.0, 1.0, 2e9}; }

CostParams flat_costs(double c) { return {c, c, 0.0, 0.0, 0.0, 0.0}; }

FisheryParams example1_fishery() { return example1_scenario().fisheries.front(); }

}  // namespace

TEST(BestResponse, QuadraticExample) {
  const auto fp = quadratic_fishery();
  EXPECT_NEAR(best_response_for_cost(200.0, 200000.0, fp), 400.0, 400.0 * 1e-4);
  EXPECT_NEAR(best_response_fishing(200.0, 0.0, 0.0, fp, flat_costs(200000.0), Side::Blue), 400.0, 0.04);
}

TEST(BestResponse, UnprofitableFirstUnitIsExactlyZero) {
  const auto fp = quadratic_fishery();
  const double psi = fp.p * fp.q * 1.01;
  EXPECT_EQ(best_response_for_cost(0.0, psi, fp), 0.0);
  EXPECT_TRUE(is_zero_fishing_optimal(0.0, 0.0, fp, flat_costs(psi), Side::Red));
}

TEST(BestResponse, MatchesGridOracleForExample1Fishery) {
  const auto fp = example1_fishery();
  const auto sc = example1_scenario();
  const double psi = sc.costs.c_B;
  const double got = best_response_fishing(300.0, 0.0, 0.0, fp, sc.costs, Side::Blue);
  const double want = test_oracles::best_response_by_grid(300.0, psi, fp, 10000);
  EXPECT_NEAR(got, want, 1e-3 * want);
}

TEST(BestResponse, AnalyticFormOverRandomDraws) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    FisheryParams fp{0.3 + 0.2 * u(rng), 1.0, 1e-4 + 2e-4 * u(rng), 1.0, 1.0, 1e9 + 2e9 * u(rng)};
    const double psi = fp.p * fp.q * (0.1 + 0.8 * u(rng));
    const double A = fp.r / (2 * fp.q) * (1 - psi / (fp.p * fp.q * fp.Z));
    const double other = 1.8 * A * u(rng);
    const double want = std::max(0.0, A - other / 2);
    const double got = best_response_for_cost(other, psi, fp);
    EXPECT_NEAR(got, want, 1e-4 * std::max(want, 1.0)) << "draw " << t;
  }
}

TEST(BestResponse, NonIncreasingInRivalEffort) {
  const auto fp = quadratic_fishery();
  double prev = best_response_for_cost(0.0, 200000.0, fp);
  for (double other = 25.0; other <= 1200.0; other += 25.0) {
    const double br = best_response_for_cost(other, 200000.0, fp);
    EXPECT_LE(br, prev + 1e-6);
    prev = br;
  }
}

TEST(ZeroFishingGate, SymmetricInteriorIsOpen) {
  EXPECT_FALSE(is_zero_fishing_optimal(0.0, 0.0, quadratic_fishery(), flat_costs(200000.0), Side::Blue));
}

TEST(ZeroFishingGate, Example1ExtremeRedPatrolsAgreesWithOracle) {
  const auto sc = example1_scenario();
  const auto fp = sc.fisheries.front();
  const double psi_B = unit_cost(0.0, 1000.0, sc.costs, Side::Blue);
  const double psi_R = unit_cost(1000.0, 0.0, sc.costs, Side::Red);
  const double red_alone = test_oracles::best_response_by_grid(0.0, psi_R, fp, 10000);
  const double x = test_oracles::largest_root_by_scan(red_alone, fp, 20000);
  const bool want = fp.p * fp.q * std::pow(x, fp.gamma) - psi_B <= 0.0;
  EXPECT_EQ(is_zero_fishing_optimal(0.0, 1000.0, fp, sc.costs, Side::Blue), want);
}

TEST(BestResponseModel, QuadraticCaseFitsAtDegreeThree) {
  const auto m = fit_best_response_model(quadratic_fishery(), flat_costs(200000.0), Side::Blue, 600, 1000, 400, 3);
  EXPECT_EQ(m.degree(), 3);
  EXPECT_GE(m.r2_held_out, 0.999);
  EXPECT_NEAR(m.predict(200.0, 10.0, 10.0), 400.0, 1.0);
}

TEST(BestResponseModel, AlwaysUnprofitablePredictsZero) {
  const auto fp = quadratic_fishery();
  const auto m = fit_best_response_model(fp, flat_costs(fp.p * fp.q * 2.0), Side::Red, 600, 1000, 400, 4);
  for (double f : {0.0, 100.0, 1000.0, 3999.0}) {
    EXPECT_LE(std::abs(m.predict(f, 300.0, 500.0)), 1e-6 * m.F_max);
  }
}

TEST(BestResponseModel, Example1HeldOutR2) {
  const auto sc = example1_scenario();
  for (Side side : {Side::Blue, Side::Red}) {
    const auto m = fit_best_response_model(sc.fisheries[4], sc.costs, side, side == Side::Blue ? 600 : 1000,
                                           side == Side::Blue ? 1000 : 600, 400, 5);
    EXPECT_GE(m.r2_held_out, kMinimumR2) << to_string(side);
  }
}

TEST(FishingEquilibrium, SymmetricCournot) {
  const auto fp = quadratic_fishery();
  const auto cp = flat_costs(200000.0);
  const auto b = fit_best_response_model(fp, cp, Side::Blue, 600, 1000, 400, 1);
  const auto r = fit_best_response_model(fp, cp, Side::Red, 1000, 600, 400, 2);
  const auto eq = solve_fishing_equilibrium(0.0, 0.0, b, r);
  EXPECT_NEAR(eq.blue, 1000.0 / 3.0, 1e-3 * 1000.0 / 3.0);
  EXPECT_NEAR(eq.red, 1000.0 / 3.0, 1e-3 * 1000.0 / 3.0);
}

TEST(FishingEquilibrium, ZeroSidePlaysMonopolyOther) {
  const auto fp = quadratic_fishery();
  CostParams cp{fp.p * fp.q * 1.5, 200000.0, 0.0, 0.0, 0.0, 0.0};
  const auto b = fit_best_response_model(fp, cp, Side::Blue, 600, 1000, 400, 1);
  const auto r = fit_best_response_model(fp, cp, Side::Red, 1000, 600, 400, 2);
  const auto eq = solve_fishing_equilibrium(100.0, 100.0, b, r);
  EXPECT_EQ(eq.blue, 0.0);
  EXPECT_NEAR(eq.red, best_response_for_cost(0.0, 200000.0, fp), 1e-9);
  EXPECT_NEAR(eq.red, 500.0, 1e-3);
}

TEST(FishingEquilibrium, Example1MatchesDampedFixedPoint) {
  const auto sc = example1_scenario();
  const auto& fp = sc.fisheries.front();
  const auto b = fit_best_response_model(fp, sc.costs, Side::Blue, 600, 1000, 400, 1);
  const auto r = fit_best_response_model(fp, sc.costs, Side::Red, 1000, 600, 400, 2);
  const auto got = solve_fishing_equilibrium(60.0, 60.0, b, r);
  const double psi_B = unit_cost(60.0, 60.0, sc.costs, Side::Blue);
  const double psi_R = unit_cost(60.0, 60.0, sc.costs, Side::Red);
  const auto [fb, fr] = test_oracles::damped_fixed_point(
      [&](double other) { return best_response_for_cost(other, psi_B, fp); },
      [&](double other) { return best_response_for_cost(other, psi_R, fp); }, 500, 0.5);
  EXPECT_NEAR(got.blue, fb, 1e-3 * fb);
  EXPECT_NEAR(got.red, fr, 1e-3 * fr);
}

TEST(FishingEquilibrium, OutputIsFixedPointOfModels) {
  const auto sc = example1_scenario();
  const auto& fp = sc.fisheries[7];
  const auto b = fit_best_response_model(fp, sc.costs, Side::Blue, 600, 1000, 400, 1);
  const auto r = fit_best_response_model(fp, sc.costs, Side::Red, 1000, 600, 400, 2);
  for (auto [pb, pr] : {std::pair{0.0, 0.0}, {50.0, 200.0}, {300.0, 20.0}, {120.0, 700.0}}) {
    const auto eq = solve_fishing_equilibrium(pb, pr, b, r);
    EXPECT_NEAR(eq.blue, b.predict(eq.red, pb, pr), 1e-3 * b.F_max);
    EXPECT_NEAR(eq.red, r.predict(eq.blue, pr, pb), 1e-3 * r.F_max);
  }
}

TEST(EquilibriumModel, InertPatrolsGiveConstantLevels) {
  Scenario sc = make_ladder_scenario(0.4, 0.0002, 1.0, 1.0, 1.5e9, 3e9, 150000, 0.0, 0.0, 2, 600, 1000, 0.1);
  const auto eq = build_equilibrium_model(sc, 5);
  for (std::size_t i = 0; i < sc.k(); ++i) {
    const auto base = eq.predict(i, 0.0, 0.0);
    for (auto [pb, pr] : {std::pair{600.0, 0.0}, {0.0, 1000.0}, {250.0, 480.0}}) {
      const auto lv = eq.predict(i, pb, pr);
      EXPECT_NEAR(lv.blue, base.blue, 1e-6 * std::max(1.0, base.blue));
      EXPECT_NEAR(lv.red, base.red, 1e-6 * std::max(1.0, base.red));
    }
  }
}

TEST(EquilibriumModel, RoundTripAgainstDirectSolveOnFreshPoints) {
  const auto sc = example1_scenario();
  const auto brms = fit_best_response_models(sc, 400, 9);
  const auto eq = fit_equilibrium_model(sc, brms, 250, 9);
  optim::Rng rng(123);
  std::uniform_real_distribution<double> ub(0.0, sc.blue_budget), ur(0.0, sc.red_budget);
  for (std::size_t i : {0u, 5u, 9u}) {
    double sse = 0.0, ss = 0.0;
    for (int t = 0; t < 100; ++t) {
      const double pb = ub(rng), pr = ur(rng);
      const auto direct = solve_fishing_equilibrium(pb, pr, brms[i].blue, brms[i].red);
      const auto model = eq.predict(i, pb, pr);
      sse += std::pow(model.blue - direct.blue, 2) + std::pow(model.red - direct.red, 2);
      ss += direct.blue * direct.blue + direct.red * direct.red;
    }
    EXPECT_LE(std::sqrt(sse / ss), 0.02) << "fishery " << i;
  }
}

TEST(EquilibriumModel, BlueLevelNonIncreasingInRedPatrols) {
  const auto sc = example1_scenario();
  const auto eq = build_equilibrium_model(sc, 3);
  const double fmax = effort_cap(sc.fisheries.front());
  for (std::size_t i : {0u, 9u}) {
    double prev = eq.predict(i, 0.0, 0.0).blue;
    for (double pr = 20.0; pr <= 1000.0; pr += 20.0) {
      const double fb = eq.predict(i, 0.0, pr).blue;
      EXPECT_LE(fb, prev + 1e-3 * fmax) << "fishery " << i << " P_R " << pr;
      prev = fb;
    }
  }
}

TEST(EquilibriumModel, SmallBatchOfSampledScenariosPassesFit) {
  ScenarioDistribution dist;
  int passed = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    try {
      const auto eq = build_equilibrium_model(sample_scenario(dist, s), s);
      passed += eq.min_r2() >= kMinimumR2;
    } catch (const FitRejected&) {
    }
  }
  EXPECT_EQ(passed, 3);
}

TEST(EquilibriumModel, TotalUtilityRejectsSizeMismatch) {
  const auto sc = example1_scenario();
  const auto eq = build_equilibrium_model(sc, 0);
  EXPECT_THROW(total_utility(Allocation::uniform(3, 600), Allocation::uniform(3, 1000), sc, eq, Side::Blue),
               std::invalid_argument);
}

TEST(EquilibriumModel, SymmetricSidesEarnEqualUtility) {
  Scenario sc = make_ladder_scenario(0.4, 0.0002, 1.0, 1.0, 2e9, 3e9, 200000, 300, 300, 1, 500, 500, 0.1);
  const auto eq = build_equilibrium_model(sc, 2);
  const Allocation p = Allocation::uniform(1, 500);
  const double ub = total_utility(p, p, sc, eq, Side::Blue);
  const double ur = total_utility(p, p, sc, eq, Side::Red);
  EXPECT_NEAR(ub, ur, 1e-6 * std::abs(ub));
}
