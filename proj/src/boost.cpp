#include "stereogate/boost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stereogate/error.hpp"
#include "stereogate/rng.hpp"

namespace stereogate {

BoostedTrees::BoostedTrees(std::size_t num_features, std::vector<DecisionTree> trees,
                           std::vector<double> stage_weights, std::vector<double> stage_losses,
                           BoostParams params)
    : num_features_(num_features),
      trees_(std::move(trees)),
      stage_weights_(std::move(stage_weights)),
      stage_losses_(std::move(stage_losses)),
      params_(params) {
  if (trees_.empty()) throw InputError("boosted trees need at least one stage");
  if (stage_weights_.size() != trees_.size() || stage_losses_.size() != trees_.size()) {
    throw InputError("boosted trees: stage count mismatch");
  }
  for (double w : stage_weights_) {
    if (!std::isfinite(w) || w <= 0.0) throw InputError("boosted trees: stage weights must be finite and > 0");
  }
}

double BoostedTrees::predict(std::span<const double> features) const {
  if (trees_.size() == 1) return trees_.front().predict(features);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    num += stage_weights_[t] * trees_[t].predict(features);
    den += stage_weights_[t];
  }
  return num / den;
}

BoostedTrees fit_boost(const Eigen::MatrixXd& x, std::span<const double> y, const BoostParams& params) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (n == 0) throw InputError("fit_boost: empty dataset");
  if (params.n_stages == 0) throw InputError("fit_boost: n_stages must be >= 1");

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::vector<double> cumulative(n);
  std::vector<std::size_t> rows(n);
  std::vector<double> errors(n);
  std::vector<double> row(p);

  std::vector<DecisionTree> trees;
  std::vector<double> stage_weights;
  std::vector<double> stage_losses;

  for (std::size_t stage = 0; stage < params.n_stages; ++stage) {
    const std::uint64_t stage_seed = derive_seed(params.seed, stage);
    Rng rng(derive_seed(stage_seed, 0));
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    const double total = cumulative.back();
    for (auto& r : rows) {
      const double u = rng.uniform() * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      r = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
    }
    DecisionTree tree = fit_tree(x, y, rows, params.tree, derive_seed(stage_seed, 1));

    double max_error = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) row[j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      errors[i] = std::abs(tree.predict(row) - y[i]);
      max_error = std::max(max_error, errors[i]);
    }
    double avg_loss = 0.0;
    if (max_error > 0.0) {
      for (std::size_t i = 0; i < n; ++i) avg_loss += weights[i] * errors[i] / max_error;
    }

    if (avg_loss < kBoostPerfectLoss) {
      trees.push_back(std::move(tree));
      stage_weights.push_back(1.0);
      stage_losses.push_back(avg_loss);
      break;
    }
    if (avg_loss >= 0.5) {
      if (trees.empty()) {
        trees.push_back(std::move(tree));
        stage_weights.push_back(1.0);
        stage_losses.push_back(avg_loss);
      }
      break;
    }

    const double beta = avg_loss / (1.0 - avg_loss);
    trees.push_back(std::move(tree));
    stage_weights.push_back(std::log(1.0 / beta));
    stage_losses.push_back(avg_loss);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] *= std::pow(beta, 1.0 - errors[i] / max_error);
      sum += weights[i];
    }
    for (double& w : weights) w /= sum;
  }
  return BoostedTrees(p, std::move(trees), std::move(stage_weights), std::move(stage_losses), params);
}

BoostedTrees fit_boost(const Dataset& ds, const BoostParams& params) {
  if (ds.empty()) throw InputError("fit_boost: empty dataset");
  const Eigen::MatrixXd x = ds.feature_matrix();
  const Eigen::VectorXd y = ds.targets();
  return fit_boost(x, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), params);
}

}  // namespace stereogate
