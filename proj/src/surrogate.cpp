#include "patrolrsm/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace patrolrsm {

void Dataset::add(std::vector<double> x, double y) {
  if (!inputs.empty() && x.size() != inputs.front().size()) {
    throw std::invalid_argument("Dataset::add: input dimension differs from earlier rows");
  }
  inputs.push_back(std::move(x));
  targets.push_back(y);
}

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

double TreeEnsemble::predict(std::span<const double> x) const { return predict(x, trees.size()); }

double TreeEnsemble::predict(std::span<const double> x, std::size_t n_trees) const {
  double s = 0.0;
  const std::size_t n = std::min(n_trees, trees.size());
  for (std::size_t t = 0; t < n; ++t) s += trees[t].predict(x);
  return base_prediction + learning_rate * s;
}

bool TreeEnsemble::inside_training_box(std::span<const double> x) const {
  if (x.size() != input_box.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < input_box[i].first || x[i] > input_box[i].second) return false;
  }
  return true;
}

namespace {

using Rows = std::vector<std::vector<double>>;
using SortedIndex = std::vector<std::vector<int>>;  // per feature, sample ids sorted by value

class TreeBuilder {
 public:
  TreeBuilder(const Rows& x, const std::vector<double>& residual, int max_depth)
      : x_(x), r_(residual), max_depth_(max_depth) {}

  RegressionTree build(const SortedIndex& sorted) {
    tree_.nodes.clear();
    grow(sorted, 0);
    return std::move(tree_);
  }

 private:
  double value(int sample, int feature) const {
    return x_[static_cast<std::size_t>(sample)][static_cast<std::size_t>(feature)];
  }

  int grow(const SortedIndex& sorted, int depth) {
    const auto& ids = sorted.front();
    const int n = static_cast<int>(ids.size());
    double sum = 0.0, sum_sq = 0.0;
    for (int i : ids) {
      sum += r_[static_cast<std::size_t>(i)];
      sum_sq += r_[static_cast<std::size_t>(i)] * r_[static_cast<std::size_t>(i)];
    }
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, sum / n});
    if (depth >= max_depth_ || n < 2 * kMinLeafSize) return index;

    const double parent = sum * sum / n;
    double best_gain = 1e-14 * sum_sq;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& order = sorted[f];
      double left = 0.0;
      for (int j = 0; j + 1 < n; ++j) {
        left += r_[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
        const int n_left = j + 1;
        if (n_left < kMinLeafSize || n - n_left < kMinLeafSize) continue;
        const double a = value(order[static_cast<std::size_t>(j)], static_cast<int>(f));
        const double b = value(order[static_cast<std::size_t>(j + 1)], static_cast<int>(f));
        if (!(a < b)) continue;
        const double right = sum - left;
        const double gain = left * left / n_left + right * right / (n - n_left) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (a + b);
          if (!(best_threshold < b)) best_threshold = a;
        }
      }
    }
    if (best_feature < 0) return index;

    SortedIndex left_ids(sorted.size()), right_ids(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (int i : sorted[f]) {
        (value(i, best_feature) <= best_threshold ? left_ids[f] : right_ids[f]).push_back(i);
      }
    }
    const int l = grow(left_ids, depth + 1);
    const int r = grow(right_ids, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  const Rows& x_;
  const std::vector<double>& r_;
  int max_depth_;
  RegressionTree tree_;
};

void check_params(const BoostingParams& p) {
  if (p.n_trees < 0 || p.max_depth < 1 || !(p.learning_rate > 0.0 && p.learning_rate <= 1.0)) {
    throw std::invalid_argument("boosting: need n_trees >= 0, max_depth >= 1, 0 < learning_rate <= 1");
  }
}

TreeEnsemble fit_rows(const Rows& x, const std::vector<double>& y, const BoostingParams& params) {
  check_params(params);
  const std::size_t m = y.size();
  if (m < 2 || x.size() != m) throw std::invalid_argument("fit_boosted_trees: need at least 2 consistent rows");
  const std::size_t k = x.front().size();

  TreeEnsemble e;
  e.learning_rate = params.learning_rate;
  e.hyperparams = params;
  e.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
  e.input_box.assign(k, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const auto& row : x) {
    if (row.size() != k) throw std::invalid_argument("fit_boosted_trees: ragged inputs");
    for (std::size_t f = 0; f < k; ++f) {
      e.input_box[f].first = std::min(e.input_box[f].first, row[f]);
      e.input_box[f].second = std::max(e.input_box[f].second, row[f]);
    }
  }

  std::vector<double> residual(m), prediction(m, e.base_prediction);
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    residual[i] = y[i] - e.base_prediction;
    loss += residual[i] * residual[i];
  }
  e.training_loss.push_back(loss / static_cast<double>(m));
  if (loss == 0.0) return e;

  SortedIndex sorted(k, std::vector<int>(m));
  for (std::size_t f = 0; f < k; ++f) {
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    std::stable_sort(sorted[f].begin(), sorted[f].end(), [&](int a, int b) {
      return x[static_cast<std::size_t>(a)][f] < x[static_cast<std::size_t>(b)][f];
    });
  }

  TreeBuilder builder(x, residual, params.max_depth);
  e.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    e.trees.push_back(builder.build(sorted));
    loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      prediction[i] += params.learning_rate * e.trees.back().predict(x[i]);
      residual[i] = y[i] - prediction[i];
      loss += residual[i] * residual[i];
    }
    e.training_loss.push_back(loss / static_cast<double>(m));
  }
  return e;
}

// Flat targets (spread below 1e-9 of their magnitude) count as perfectly explained.
double pooled_r2(const std::vector<double>& y, const std::vector<double>& pred) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double scale = std::max(std::abs(*lo), std::abs(*hi));
  if (*hi - *lo <= 1e-9 * scale) return 1.0;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sse += (y[i] - pred[i]) * (y[i] - pred[i]);
    sst += (y[i] - mean) * (y[i] - mean);
  }
  return 1.0 - sse / sst;
}

}  // namespace

TreeEnsemble fit_boosted_trees(const Dataset& data, const BoostingParams& params) {
  if (data.size() < 5) throw std::invalid_argument("fit_boosted_trees: need at least 5 samples");
  return fit_rows(data.inputs, data.targets, params);
}

std::vector<BoostingParams> default_grid() {
  std::vector<BoostingParams> grid;
  for (int n : {100, 300}) {
    for (int d : {2, 3, 4}) {
      for (double lr : {0.05, 0.1}) grid.push_back({n, d, lr});
    }
  }
  return grid;
}

CvSelection cross_validate_select(const Dataset& data, const std::vector<BoostingParams>& grid,
                                  int folds) {
  if (grid.empty()) throw std::invalid_argument("cross_validate_select: empty grid");
  if (folds < 2 || data.size() < static_cast<std::size_t>(folds)) {
    throw std::invalid_argument("cross_validate_select: need folds >= 2 and at least folds samples");
  }
  for (const auto& p : grid) check_params(p);
  const std::size_t m = data.size();

  // Entries sharing (depth, rate) reuse one fit: fewer trees is a prefix of more.
  std::map<std::pair<int, double>, int> longest;
  for (const auto& p : grid) {
    auto& n = longest[{p.max_depth, p.learning_rate}];
    n = std::max(n, p.n_trees);
  }
  std::vector<std::vector<double>> oof(grid.size(), std::vector<double>(m, 0.0));
  for (const auto& [key, n_max] : longest) {
    for (int fold = 0; fold < folds; ++fold) {
      Rows x;
      std::vector<double> y;
      for (std::size_t i = 0; i < m; ++i) {
        if (static_cast<int>(i % static_cast<std::size_t>(folds)) == fold) continue;
        x.push_back(data.inputs[i]);
        y.push_back(data.targets[i]);
      }
      const TreeEnsemble e = fit_rows(x, y, {n_max, key.first, key.second});
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (grid[g].max_depth != key.first || grid[g].learning_rate != key.second) continue;
        for (std::size_t i = static_cast<std::size_t>(fold); i < m; i += static_cast<std::size_t>(folds)) {
          oof[g][i] = e.predict(data.inputs[i], static_cast<std::size_t>(grid[g].n_trees));
        }
      }
    }
  }

  CvSelection out;
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair{grid[a].n_trees, grid[a].max_depth} < std::pair{grid[b].n_trees, grid[b].max_depth};
  });
  std::vector<double> scores(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) scores[g] = pooled_r2(data.targets, oof[g]);
  bool first = true;
  for (std::size_t g : order) {
    if (first || scores[g] > out.cv_r2) {
      out.best = grid[g];
      out.cv_r2 = scores[g];
      first = false;
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) out.scores.emplace_back(grid[g], scores[g]);
  return out;
}

void to_json(nlohmann::json& j, const BoostingParams& p) {
  j = nlohmann::json{{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"learning_rate", p.learning_rate}};
}

void to_json(nlohmann::json& j, const TreeEnsemble& e) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : e.trees) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   value = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left},
                     {"right", right}, {"value", value}});
  }
  j = nlohmann::json{{"base_prediction", e.base_prediction},
                     {"learning_rate", e.learning_rate},
                     {"hyperparams", e.hyperparams},
                     {"trees", trees}};
  j["cv_r2"] = e.cv_r2 ? nlohmann::json(*e.cv_r2) : nlohmann::json(nullptr);
}

}  // namespace patrolrsm
