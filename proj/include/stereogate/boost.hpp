#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stereogate/dataset.hpp"
#include "stereogate/tree.hpp"

namespace stereogate {

struct BoostParams {
  std::size_t n_stages = 50;
  TreeParams tree{.max_depth = 3, .min_samples_leaf = 1, .mtry = std::nullopt};
  std::uint64_t seed = 0;
};

// AdaBoost.R2 with the linear loss. Each stage fits a tree to a weighted
// bootstrap of the training set, computes the weighted average loss
// Lbar = sum_i w_i |e_i| / max|e|, and gets weight ln(1/beta) with
// beta = Lbar / (1 - Lbar). Sample weights are multiplied by
// beta^(1 - loss_i) and renormalized.
//
// Boosting stops early when Lbar < 1e-12 (the stage is kept with weight 1)
// or Lbar >= 0.5 (the stage is dropped, unless it is the first, which is
// then kept with weight 1 so the ensemble is never empty).
//
// Prediction is the weighted mean of stage outputs rather than Drucker's
// weighted median.
class BoostedTrees {
 public:
  BoostedTrees() = default;
  BoostedTrees(std::size_t num_features, std::vector<DecisionTree> trees, std::vector<double> stage_weights,
               std::vector<double> stage_losses, BoostParams params);

  std::size_t num_features() const { return num_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const std::vector<double>& stage_weights() const { return stage_weights_; }
  // Average loss Lbar of each retained stage.
  const std::vector<double>& stage_losses() const { return stage_losses_; }
  const BoostParams& params() const { return params_; }

  double predict(std::span<const double> features) const;

 private:
  std::size_t num_features_ = 0;
  std::vector<DecisionTree> trees_;
  std::vector<double> stage_weights_;
  std::vector<double> stage_losses_;
  BoostParams params_;
};

BoostedTrees fit_boost(const Eigen::MatrixXd& x, std::span<const double> y, const BoostParams& params);
BoostedTrees fit_boost(const Dataset& ds, const BoostParams& params);

inline constexpr double kBoostPerfectLoss = 1e-12;

}  // namespace stereogate
