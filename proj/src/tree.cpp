#include "stereogate/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stereogate/error.hpp"
#include "stereogate/rng.hpp"

namespace stereogate {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, std::span<const double> y, const TreeParams& params,
              std::uint64_t seed, TreeTask task, std::size_t num_classes)
      : x_(x),
        y_(y),
        params_(params),
        rng_(seed),
        task_(task),
        num_classes_(num_classes),
        p_(static_cast<std::size_t>(x.cols())),
        mtry_(params.mtry.value_or(p_)) {
    features_.resize(p_);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const std::size_t n = end - begin;
    {
      TreeNode& node = nodes_.back();
      node.samples = n;
      summarize(begin, end, node);
    }

    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    if (depth_reached || n < 2 * params_.min_samples_leaf || pure(begin, end)) return id;

    Split best = find_split(begin, end);
    if (best.feature < 0) return id;

    auto mid_it = std::stable_partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(begin), rows_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t r) {
          return x_(static_cast<Eigen::Index>(r), best.feature) <= best.threshold;
        });
    const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());

    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    node.decrease = node_cost(node) - node_cost(nodes_[static_cast<std::size_t>(left)]) -
                    node_cost(nodes_[static_cast<std::size_t>(right)]);
    if (node.decrease < 0.0) node.decrease = 0.0;
    return id;
  }

  static double node_cost(const TreeNode& node) {
    return static_cast<double>(node.samples) * node.impurity;
  }

  void summarize(std::size_t begin, std::size_t end, TreeNode& node) const {
    const std::size_t n = end - begin;
    if (task_ == TreeTask::regression) {
      double sum = 0.0;
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = y_[rows_[i]];
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const double d = y_[rows_[i]] - mean;
        ss += d * d;
      }
      node.value = std::clamp(mean, lo, hi);
      node.impurity = lo == hi ? 0.0 : ss / static_cast<double>(n);
    } else {
      std::vector<std::size_t> counts(num_classes_, 0);
      for (std::size_t i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(y_[rows_[i]])];
      std::size_t best = 0;
      double sq = 0.0;
      for (std::size_t c = 0; c < num_classes_; ++c) {
        if (counts[c] > counts[best]) best = c;
        sq += static_cast<double>(counts[c]) * static_cast<double>(counts[c]);
      }
      node.value = static_cast<double>(best);
      node.impurity = 1.0 - sq / (static_cast<double>(n) * static_cast<double>(n));
    }
  }

  bool pure(std::size_t begin, std::size_t end) const {
    const double first = y_[rows_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (y_[rows_[i]] != first) return false;
    }
    return true;
  }

  std::vector<std::size_t> candidate_features() {
    if (mtry_ >= p_) return features_;
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::size_t j = i + rng_.below(p_ - i);
      std::swap(features_[i], features_[j]);
    }
    std::vector<std::size_t> chosen(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  Split find_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const std::size_t min_leaf = params_.min_samples_leaf;
    auto candidates = candidate_features();

    // Scores are "between-group" sums: for regression
    //   S_L^2/n_L + S_R^2/n_R - S^2/n on node-centered targets,
    // for classification sum_c (c_L^2/n_L + c_R^2/n_R) - sum_c c^2/n.
    // Both equal the impurity decrease n*I - n_L*I_L - n_R*I_R.
    double center = 0.0;
    double scale = 0.0;
    std::vector<double> total_counts;
    if (task_ == TreeTask::regression) {
      for (std::size_t i = begin; i < end; ++i) center += y_[rows_[i]];
      center /= static_cast<double>(n);
      for (std::size_t i = begin; i < end; ++i) {
        const double d = y_[rows_[i]] - center;
        scale += d * d;
      }
    } else {
      total_counts.assign(num_classes_, 0.0);
      for (std::size_t i = begin; i < end; ++i) total_counts[static_cast<std::size_t>(y_[rows_[i]])] += 1.0;
      scale = static_cast<double>(n);
    }
    const double tie = kSplitTieTolerance * (scale > 0.0 ? scale : 1.0);

    Split best;
    bool have_best = false;
    std::vector<std::pair<double, double>> pairs(n);
    std::vector<double> left_counts;
    for (std::size_t f : candidates) {
      const auto col = static_cast<Eigen::Index>(f);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = rows_[begin + i];
        pairs[i] = {x_(static_cast<Eigen::Index>(r), col), y_[r]};
      }
      std::sort(pairs.begin(), pairs.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (pairs.front().first == pairs.back().first) continue;

      double left_sum = 0.0;
      double total_sum = 0.0;
      if (task_ == TreeTask::regression) {
        for (const auto& pr : pairs) total_sum += pr.second - center;
      } else {
        left_counts.assign(num_classes_, 0.0);
      }
      const double n_d = static_cast<double>(n);
      double parent_term = 0.0;
      if (task_ == TreeTask::regression) {
        parent_term = total_sum * total_sum / n_d;
      } else {
        for (double c : total_counts) parent_term += c * c / n_d;
      }

      for (std::size_t i = 0; i + 1 < n; ++i) {
        if (task_ == TreeTask::regression) {
          left_sum += pairs[i].second - center;
        } else {
          left_counts[static_cast<std::size_t>(pairs[i].second)] += 1.0;
        }
        if (pairs[i].first == pairs[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double nl = static_cast<double>(n_left);
        const double nr = static_cast<double>(n_right);
        double score;
        if (task_ == TreeTask::regression) {
          const double right_sum = total_sum - left_sum;
          score = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_term;
        } else {
          double acc = 0.0;
          for (std::size_t c = 0; c < num_classes_; ++c) {
            const double cl = left_counts[c];
            const double cr = total_counts[c] - cl;
            acc += cl * cl / nl + cr * cr / nr;
          }
          score = acc - parent_term;
        }
        if (!have_best || score > best.decrease + tie) {
          const double a = pairs[i].first;
          const double b = pairs[i + 1].first;
          double threshold = (a + b) / 2.0;
          if (!std::isfinite(threshold)) threshold = a + (b - a) / 2.0;
          if (!(threshold < b)) threshold = a;
          best = {static_cast<int>(f), threshold, score};
          have_best = true;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  std::span<const double> y_;
  const TreeParams& params_;
  Rng rng_;
  TreeTask task_;
  std::size_t num_classes_;
  std::size_t p_;
  std::size_t mtry_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree::DecisionTree(TreeTask task, std::size_t num_features, std::size_t num_classes,
                           std::vector<TreeNode> nodes)
    : task_(task), num_features_(num_features), num_classes_(num_classes), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InputError("decision tree needs at least one node");
  const int count = static_cast<int>(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    if (nd.is_leaf()) continue;
    if (nd.feature >= static_cast<int>(num_features_) || nd.left <= static_cast<int>(i) ||
        nd.right <= static_cast<int>(i) || nd.left >= count || nd.right >= count) {
      throw InputError("decision tree: malformed node " + std::to_string(i));
    }
  }
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> features) const {
  if (features.size() != num_features_) {
    throw InputError("tree predict: expected " + std::to_string(num_features_) + " features, got " +
                     std::to_string(features.size()));
  }
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    const auto f = static_cast<std::size_t>(node->feature);
    node = &nodes_[static_cast<std::size_t>(features[f] <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

double DecisionTree::predict(std::span<const double> features) const { return leaf_for(features).value; }

int DecisionTree::predict_class(std::span<const double> features) const {
  return static_cast<int>(leaf_for(features).value);
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (nodes_[i].is_leaf()) continue;
    depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
  }
  return deepest;
}

void DecisionTree::accumulate_importance(std::span<double> out) const {
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) out[static_cast<std::size_t>(node.feature)] += node.decrease;
  }
}

DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const std::size_t> rows,
                      const TreeParams& params, std::uint64_t seed, TreeTask task, std::size_t num_classes) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (rows.empty() || n == 0) throw InputError("fit_tree: empty dataset");
  if (y.size() != n) throw InputError("fit_tree: target length differs from row count");
  if (p == 0) throw InputError("fit_tree: no features");
  if (params.min_samples_leaf == 0) throw InputError("fit_tree: min_samples_leaf must be >= 1");
  if (params.mtry && (*params.mtry == 0 || *params.mtry > p)) {
    throw InputError("fit_tree: mtry must lie in [1, " + std::to_string(p) + "]");
  }
  for (std::size_t r : rows) {
    if (r >= n) throw InputError("fit_tree: row index out of range");
  }
  if (task == TreeTask::classification) {
    if (num_classes < 1) throw InputError("fit_tree: classification needs num_classes >= 1");
    for (std::size_t r : rows) {
      const double v = y[r];
      if (!(v >= 0.0) || v >= static_cast<double>(num_classes) || v != std::floor(v)) {
        throw InputError("fit_tree: class labels must be integers in [0, num_classes)");
      }
    }
  } else {
    num_classes = 0;
    for (std::size_t r : rows) {
      if (!std::isfinite(y[r])) throw InputError("fit_tree: non-finite target");
    }
  }
  TreeBuilder builder(x, y, params, seed, task, num_classes);
  auto nodes = builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
  return DecisionTree(task, p, num_classes, std::move(nodes));
}

DecisionTree fit_tree(const Dataset& ds, const TreeParams& params, std::uint64_t seed) {
  if (ds.empty()) throw InputError("fit_tree: empty dataset");
  const Eigen::MatrixXd x = ds.feature_matrix();
  const Eigen::VectorXd y = ds.targets();
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree(x, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), rows, params,
                  seed, TreeTask::regression);
}

}  // namespace stereogate
