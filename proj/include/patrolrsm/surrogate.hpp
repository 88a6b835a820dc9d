#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace patrolrsm {

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;

  std::size_t size() const noexcept { return targets.size(); }
  void add(std::vector<double> x, double y);
};

struct BoostingParams {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;

  friend bool operator==(const BoostingParams&, const BoostingParams&) = default;
};

/// Node of an axis-aligned regression tree; leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root

  double predict(std::span<const double> x) const;
};

/// Least-squares gradient boosting: base + learning_rate * sum of tree outputs.
struct TreeEnsemble {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_prediction = 0.0;
  BoostingParams hyperparams;
  std::optional<double> cv_r2;
  std::vector<double> training_loss;  ///< mean squared residual after 0, 1, ..., n trees
  std::vector<std::pair<double, double>> input_box;  ///< training bounding box

  double predict(std::span<const double> x) const;
  /// Prediction using only the first `n_trees` stages.
  double predict(std::span<const double> x, std::size_t n_trees) const;
  bool inside_training_box(std::span<const double> x) const;
};

inline constexpr int kMinLeafSize = 2;

TreeEnsemble fit_boosted_trees(const Dataset& data, const BoostingParams& params);

/// n_trees {100, 300} x max_depth {2, 3, 4} x learning_rate {0.05, 0.1}.
std::vector<BoostingParams> default_grid();

struct CvSelection {
  BoostingParams best;
  double cv_r2 = 0.0;
  std::vector<std::pair<BoostingParams, double>> scores;  ///< grid order
};

/// k-fold CV (sample i goes to fold i mod folds) with pooled out-of-fold R^2.
/// Ties prefer fewer trees, then shallower trees, then the earlier grid entry.
CvSelection cross_validate_select(const Dataset& data, const std::vector<BoostingParams>& grid,
                                  int folds = 5);

void to_json(nlohmann::json& j, const BoostingParams& p);
void to_json(nlohmann::json& j, const TreeEnsemble& e);

}  // namespace patrolrsm
