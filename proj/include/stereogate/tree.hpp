#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stereogate/dataset.hpp"

namespace stereogate {

enum class TreeTask { regression, classification };

struct TreeParams {
  // nullopt: grow until leaves are pure or too small to split.
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 1;
  // Candidate features drawn without replacement at each node; nullopt
  // means every feature.
  std::optional<std::size_t> mtry;
};

struct TreeNode {
  // -1 for leaves.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Mean target (regression) or majority class index (classification).
  double value = 0.0;
  std::size_t samples = 0;
  // Variance (regression) or Gini index (classification) of the node.
  double impurity = 0.0;
  // samples * impurity minus the same quantity summed over both children.
  double decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Binary CART tree. Inputs route left when x[feature] <= threshold.
class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(TreeTask task, std::size_t num_features, std::size_t num_classes,
               std::vector<TreeNode> nodes);

  TreeTask task() const { return task_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return num_classes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  double predict(std::span<const double> features) const;
  int predict_class(std::span<const double> features) const;
  const TreeNode& leaf_for(std::span<const double> features) const;
  std::size_t depth() const;

  // Adds each internal node's decrease to out[feature].
  void accumulate_importance(std::span<double> out) const;

 private:
  TreeTask task_ = TreeTask::regression;
  std::size_t num_features_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<TreeNode> nodes_;
};

// Greedy recursive partitioning over the training rows listed in rows
// (repeats allowed, as produced by bootstrap resampling).
//
// Candidate thresholds are midpoints between consecutive distinct values.
// The split with the largest impurity decrease wins; decreases within a
// relative 1e-12 of the current best count as ties, which go to the lowest
// feature index and then the lowest threshold. For classification, y holds
// class indices 0..num_classes-1.
DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y,
                      std::span<const std::size_t> rows, const TreeParams& params,
                      std::uint64_t seed, TreeTask task = TreeTask::regression,
                      std::size_t num_classes = 0);

// Regression tree on every record of ds, targeting ddg.
DecisionTree fit_tree(const Dataset& ds, const TreeParams& params, std::uint64_t seed);

// Relative tolerance under which two split scores are considered equal.
inline constexpr double kSplitTieTolerance = 1e-12;

}  // namespace stereogate
