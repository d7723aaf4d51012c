#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stereogate/dataset.hpp"
#include "stereogate/tree.hpp"

namespace stereogate {

struct ForestParams {
  std::size_t n_trees = 100;
  // nullopt: ceil(p/3) for regression, ceil(sqrt(p)) for classification.
  std::optional<std::size_t> mtry;
  bool bootstrap = true;
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
  // Worker threads for tree fitting; 0 uses the hardware concurrency.
  // Results do not depend on this value.
  std::size_t threads = 0;
};

std::size_t default_mtry(TreeTask task, std::size_t num_features);

// Bagged CART ensemble. Tree t resamples with derive_seed(seed, t) and
// grows with an independent child stream, so trees can be fit in any order.
class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(TreeTask task, std::size_t num_features, std::size_t num_classes,
               std::vector<DecisionTree> trees, ForestParams params);

  TreeTask task() const { return task_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return num_classes_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }

  // Mean decrease in impurity per feature, summed over all trees and scaled
  // to total 100. All zeros when no tree has a split.
  const std::vector<double>& importances() const { return importances_; }

  // Mean of the tree outputs (regression).
  double predict(std::span<const double> features) const;
  // Majority vote; ties go to the lowest class index.
  int predict_class(std::span<const double> features) const;

 private:
  TreeTask task_ = TreeTask::regression;
  std::size_t num_features_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<DecisionTree> trees_;
  ForestParams params_;
  std::vector<double> importances_;
};

RandomForest fit_rf(const Eigen::MatrixXd& x, std::span<const double> y, const ForestParams& params,
                    TreeTask task = TreeTask::regression, std::size_t num_classes = 0);
RandomForest fit_rf(const Dataset& ds, const ForestParams& params);

}  // namespace stereogate
