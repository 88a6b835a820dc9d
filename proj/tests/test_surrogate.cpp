#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "patrolrsm/optim.hpp"
#include "patrolrsm/surrogate.hpp"

using namespace patrolrsm;

namespace {

Dataset from_function(int m, int k, std::uint64_t seed, double scale, const std::function<double(const std::vector<double>&)>& f) {
  optim::Rng rng(seed);
  Dataset d;
  for (auto& row : optim::latin_hypercube(m, k, rng)) {
    for (double& x : row) x *= scale;
    const double y = f(row);
    d.add(row, y);
  }
  return d;
}

double r2_on(const TreeEnsemble& e, const Dataset& d) {
  double mean = 0.0;
  for (double y : d.targets) mean += y;
  mean /= static_cast<double>(d.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sse += std::pow(d.targets[i] - e.predict(d.inputs[i]), 2);
    sst += std::pow(d.targets[i] - mean, 2);
  }
  return 1.0 - sse / sst;
}

}  // namespace

TEST(Boosting, ConstantTargetsPredictConstant) {
  Dataset d;
  for (int i = 0; i < 12; ++i) d.add({double(i), double(i * i % 5)}, 7.25);
  const auto e = fit_boosted_trees(d, {50, 3, 0.1});
  for (double a : {-3.0, 0.5, 4.0, 20.0}) EXPECT_DOUBLE_EQ(e.predict(std::vector<double>{a, 1.0}), 7.25);
}

TEST(Boosting, BaseOnlyEnsemblePredictsBase) {
  TreeEnsemble e;
  e.base_prediction = 3.5;
  EXPECT_EQ(e.predict(std::vector<double>{1.0, 2.0}), 3.5);
}

TEST(Boosting, StepFunctionFitsWithStumps) {
  Dataset d;
  for (int i = 0; i < 40; ++i) d.add({i / 40.0}, i < 17 ? -2.0 : 5.0);
  const auto e = fit_boosted_trees(d, {300, 1, 0.1});
  EXPECT_GT(r2_on(e, d), 0.999);
}

TEST(Boosting, TrainingLossNonIncreasing) {
  const auto d = from_function(80, 3, 4, 1.0, [](const auto& x) { return std::sin(6 * x[0]) + x[1] * x[2]; });
  const auto e = fit_boosted_trees(d, {200, 3, 0.1});
  ASSERT_EQ(e.training_loss.size(), 201u);
  for (std::size_t s = 1; s < e.training_loss.size(); ++s) EXPECT_LE(e.training_loss[s], e.training_loss[s - 1]);
}

TEST(Boosting, PredictionFormulaAndPrefix) {
  const auto d = from_function(30, 2, 5, 1.0, [](const auto& x) { return x[0] - 2 * x[1]; });
  const auto e = fit_boosted_trees(d, {20, 2, 0.3});
  const std::vector<double> x{0.3, 0.6};
  double manual = e.base_prediction;
  for (const auto& t : e.trees) manual += e.learning_rate * t.predict(x);
  EXPECT_NEAR(e.predict(x), manual, 1e-12);
  EXPECT_EQ(e.predict(x, 0), e.base_prediction);
  EXPECT_EQ(e.predict(x, e.trees.size()), e.predict(x));
  EXPECT_EQ(e.predict(x), e.predict(x));
}

TEST(Boosting, OverfitReplaysTrainingTargets) {
  const auto d = from_function(50, 4, 6, 1.0, [](const auto& x) { return std::exp(x[0]) * x[1] + x[2] - x[3]; });
  const auto e = fit_boosted_trees(d, {1000, 6, 0.3});
  double sse = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sse += std::pow(e.predict(d.inputs[i]) - d.targets[i], 2);
    ss += d.targets[i] * d.targets[i];
  }
  EXPECT_LE(std::sqrt(sse / ss), 0.01);
}

TEST(Boosting, SameLeavesGiveIdenticalPredictions) {
  Dataset d;
  for (int i = 0; i < 20; ++i) d.add({double(i)}, i < 10 ? 1.0 : 4.0);
  const auto e = fit_boosted_trees(d, {10, 1, 0.5});
  // 2.1 and 2.9 fall between the same training points, so every split sends them alike.
  EXPECT_EQ(e.predict(std::vector<double>{2.1}), e.predict(std::vector<double>{2.9}));
}

TEST(Boosting, TrainingBoxFlag) {
  Dataset d;
  for (int i = 0; i < 10; ++i) d.add({double(i), 10.0 - i}, i);
  const auto e = fit_boosted_trees(d, {5, 2, 0.1});
  EXPECT_TRUE(e.inside_training_box(std::vector<double>{4.5, 3.0}));
  EXPECT_FALSE(e.inside_training_box(std::vector<double>{-0.5, 3.0}));
}

TEST(Boosting, RejectsTooFewSamples) {
  Dataset d;
  for (int i = 0; i < 4; ++i) d.add({double(i)}, i);
  EXPECT_THROW(fit_boosted_trees(d, {}), std::invalid_argument);
}

TEST(CrossValidation, TwoFoldStumpMatchesHandComputation) {
  const std::vector<double> x{0.11, 0.93, 0.42, 0.67, 0.25, 0.78, 0.05, 0.56, 0.34, 0.88};
  const std::vector<double> y{1.3, 4.1, 2.2, 3.9, 0.7, 3.1, 1.1, 2.8, 1.9, 4.4};
  Dataset d;
  for (std::size_t i = 0; i < x.size(); ++i) d.add({x[i]}, y[i]);

  const double want = test_oracles::stump_cv_r2(x, y, 2);

  const auto sel = cross_validate_select(d, {{1, 1, 1.0}}, 2);
  EXPECT_EQ(sel.best, (BoostingParams{1, 1, 1.0}));
  EXPECT_NEAR(sel.cv_r2, want, 1e-12);
}

TEST(CrossValidation, SingleElementGrid) {
  const auto d = from_function(30, 2, 8, 1.0, [](const auto& x) { return x[0] + x[1]; });
  const auto sel = cross_validate_select(d, {{100, 2, 0.1}});
  EXPECT_EQ(sel.best, (BoostingParams{100, 2, 0.1}));
  ASSERT_EQ(sel.scores.size(), 1u);
  EXPECT_EQ(sel.scores[0].second, sel.cv_r2);
}

TEST(CrossValidation, PureNoiseFailsAdequacy) {
  double worst = -INFINITY;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> noise;
    const auto d = from_function(60, 3, seed, 1.0, [&](const auto&) { return noise(rng); });
    for (const auto& [p, r2] : cross_validate_select(d, default_grid()).scores) worst = std::max(worst, r2);
  }
  RecordProperty("max_cv_r2", std::to_string(worst));
  EXPECT_LE(worst, 0.1);
}

TEST(CrossValidation, SmoothFunctionPassesAdequacy) {
  const auto f = [](const std::vector<double>& x) { return std::sin(3 * x[0]) + x[1] * x[1] - x[0] * x[2]; };
  const auto d = from_function(150, 3, 21, 1.0, f);
  const auto sel = cross_validate_select(d, default_grid());
  EXPECT_GT(sel.cv_r2, 0.9);
  auto e = fit_boosted_trees(d, sel.best);
  EXPECT_GT(r2_on(e, from_function(200, 3, 22, 1.0, f)), 0.9);
}

TEST(CrossValidation, InteractionNeedsDepthTwo) {
  const auto d = from_function(200, 3, 31, 1.0, [](const auto& x) {
    return (x[0] > 0.5) == (x[1] > 0.5) ? 1.0 : -1.0;
  });
  const auto sel = cross_validate_select(d, default_grid());
  EXPECT_GE(sel.best.max_depth, 2);
}

TEST(CrossValidation, TiesPreferFewerTreesThenShallower) {
  Dataset d;
  for (int i = 0; i < 20; ++i) d.add({double(i)}, 5.0);
  const auto sel = cross_validate_select(d, {{300, 4, 0.1}, {100, 3, 0.1}, {100, 2, 0.1}});
  EXPECT_EQ(sel.best, (BoostingParams{100, 2, 0.1}));
}

TEST(Boosting, JsonHasTreeArrays) {
  const auto d = from_function(20, 2, 9, 1.0, [](const auto& x) { return x[0]; });
  auto e = fit_boosted_trees(d, {3, 2, 0.1});
  const nlohmann::json j = e;
  ASSERT_EQ(j["trees"].size(), 3u);
  EXPECT_TRUE(j["trees"][0].contains("threshold"));
  EXPECT_TRUE(j["cv_r2"].is_null());
}
