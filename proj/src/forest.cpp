#include "stereogate/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stereogate/error.hpp"
#include "stereogate/parallel.hpp"
#include "stereogate/rng.hpp"

namespace stereogate {

std::size_t default_mtry(TreeTask task, std::size_t num_features) {
  if (num_features == 0) return 0;
  const double p = static_cast<double>(num_features);
  const double m = task == TreeTask::regression ? std::ceil(p / 3.0) : std::ceil(std::sqrt(p));
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, num_features);
}

RandomForest::RandomForest(TreeTask task, std::size_t num_features, std::size_t num_classes,
                           std::vector<DecisionTree> trees, ForestParams params)
    : task_(task),
      num_features_(num_features),
      num_classes_(num_classes),
      trees_(std::move(trees)),
      params_(params) {
  if (trees_.empty()) throw InputError("random forest needs at least one tree");
  importances_.assign(num_features_, 0.0);
  for (const auto& t : trees_) {
    if (t.num_features() != num_features_ || t.task() != task_) {
      throw InputError("random forest: tree shape does not match the forest");
    }
    t.accumulate_importance(importances_);
  }
  const double total = std::accumulate(importances_.begin(), importances_.end(), 0.0);
  if (total > 0.0) {
    for (double& v : importances_) v = 100.0 * v / total;
  }
}

double RandomForest::predict(std::span<const double> features) const {
  double sum = 0.0;
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& t : trees_) {
    const double v = t.predict(features);
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return std::clamp(sum / static_cast<double>(trees_.size()), lo, hi);
}

int RandomForest::predict_class(std::span<const double> features) const {
  std::vector<std::size_t> votes(std::max<std::size_t>(num_classes_, 1), 0);
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict_class(features))];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

RandomForest fit_rf(const Eigen::MatrixXd& x, std::span<const double> y, const ForestParams& params,
                    TreeTask task, std::size_t num_classes) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (n == 0) throw InputError("fit_rf: empty dataset");
  if (params.n_trees == 0) throw InputError("fit_rf: n_trees must be >= 1");
  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  tree_params.mtry = params.mtry.value_or(default_mtry(task, p));
  if (*tree_params.mtry == 0 || *tree_params.mtry > p) {
    throw InputError("fit_rf: mtry must lie in [1, " + std::to_string(p) + "]");
  }

  std::vector<DecisionTree> trees(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, t);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      Rng rng(derive_seed(tree_seed, 0));
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[t] = fit_tree(x, y, rows, tree_params, derive_seed(tree_seed, 1), task, num_classes);
  });
  return RandomForest(task, p, task == TreeTask::classification ? num_classes : 0, std::move(trees), params);
}

RandomForest fit_rf(const Dataset& ds, const ForestParams& params) {
  if (ds.empty()) throw InputError("fit_rf: empty dataset");
  const Eigen::MatrixXd x = ds.feature_matrix();
  const Eigen::VectorXd y = ds.targets();
  return fit_rf(x, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), params);
}

}  // namespace stereogate
