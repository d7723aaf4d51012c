#include "stereogate/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stereogate/error.hpp"
#include "stereogate/splits.hpp"

namespace stereogate {

namespace {

struct Standardized {
  Eigen::MatrixXd z;
  Eigen::VectorXd yc;
  double y_mean = 0.0;
  std::vector<double> means;
  std::vector<double> scales;
  std::vector<double> col_sq;  // (1/n) ||z_j||^2
};

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() == 0) throw InputError("lasso: no records");
  if (x.rows() != y.size()) throw InputError("lasso: feature and target row counts differ");
  if (!x.allFinite() || !y.allFinite()) throw InputError("lasso: non-finite input");
}

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  const auto p = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Standardized s;
  s.z.resize(n, p);
  s.means.resize(static_cast<std::size_t>(p));
  s.scales.resize(static_cast<std::size_t>(p));
  s.col_sq.assign(static_cast<std::size_t>(p), 0.0);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto col = x.col(j);
    const double mean = col.mean();
    const bool constant = (col.array() == col(0)).all();
    double scale = 0.0;
    if (!constant) scale = std::sqrt((col.array() - mean).square().sum() * inv_n);
    const auto sj = static_cast<std::size_t>(j);
    s.means[sj] = mean;
    s.scales[sj] = scale > 0.0 ? scale : 0.0;
    if (s.scales[sj] > 0.0) {
      s.z.col(j) = (col.array() - mean) / scale;
      s.col_sq[sj] = s.z.col(j).squaredNorm() * inv_n;
    } else {
      s.z.col(j).setZero();
    }
  }
  s.y_mean = y.mean();
  s.yc = y.array() - s.y_mean;
  return s;
}

double soft_threshold(double v, double lambda) {
  if (v > lambda) return v - lambda;
  if (v < -lambda) return v + lambda;
  return 0.0;
}

LassoModel descend(const Standardized& s, double lambda, std::vector<double> beta,
                   const LassoParams& params) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lasso: lambda must be finite and >= 0");
  const auto n = s.z.rows();
  const auto p = s.z.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd r = s.yc;
  for (Eigen::Index j = 0; j < p; ++j) {
    double b = beta[static_cast<std::size_t>(j)];
    if (b != 0.0) r -= b * s.z.col(j);
  }

  LassoModel m;
  m.lambda = lambda;
  for (std::size_t iter = 1; iter <= params.max_iter; ++iter) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (s.scales[sj] == 0.0) continue;
      const double old = beta[sj];
      const double rho = s.z.col(j).dot(r) * inv_n + s.col_sq[sj] * old;
      const double updated = soft_threshold(rho, lambda) / s.col_sq[sj];
      if (updated != old) {
        r -= (updated - old) * s.z.col(j);
        beta[sj] = updated;
        max_delta = std::max(max_delta, std::abs(updated - old));
      }
    }
    m.iterations = iter;
    if (max_delta < params.tol) {
      m.converged = true;
      break;
    }
  }

  m.means = s.means;
  m.scales = s.scales;
  m.standardized_coefficients = beta;
  m.coefficients.assign(beta.size(), 0.0);
  double intercept = s.y_mean;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (s.scales[j] == 0.0 || beta[j] == 0.0) continue;
    m.coefficients[j] = beta[j] / s.scales[j];
    intercept -= m.coefficients[j] * s.means[j];
  }
  m.intercept = intercept;
  return m;
}

double lambda_max_standardized(const Standardized& s) {
  const double inv_n = 1.0 / static_cast<double>(s.z.rows());
  double best = 0.0;
  for (Eigen::Index j = 0; j < s.z.cols(); ++j) {
    if (s.scales[static_cast<std::size_t>(j)] == 0.0) continue;
    // Same arithmetic as the first coordinate update from beta = 0, so
    // lambda = lambda_max soft-thresholds every coordinate to exactly 0.
    best = std::max(best, std::abs(s.z.col(j).dot(s.yc) * inv_n));
  }
  return best;
}

}  // namespace

double LassoModel::predict(std::span<const double> features) const {
  if (features.size() != coefficients.size()) {
    throw InputError("lasso predict: expected " + std::to_string(coefficients.size()) +
                     " features, got " + std::to_string(features.size()));
  }
  double out = intercept;
  for (std::size_t j = 0; j < coefficients.size(); ++j) out += coefficients[j] * features[j];
  return out;
}

std::size_t LassoModel::nonzero_count() const {
  return static_cast<std::size_t>(
      std::count_if(coefficients.begin(), coefficients.end(), [](double c) { return c != 0.0; }));
}

double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_inputs(x, y);
  return lambda_max_standardized(standardize(x, y));
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t count,
                                double ratio) {
  if (count == 0) throw InputError("lambda grid needs at least one point");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("lambda grid ratio must lie in (0, 1)");
  double top = lambda_max(x, y);
  if (top <= 0.0) top = 1.0;
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = top;
    return grid;
  }
  const double log_top = std::log(top);
  const double log_bottom = std::log(top * ratio);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = std::exp(log_top + t * (log_bottom - log_top));
  }
  grid.front() = top;
  return grid;
}

LassoModel fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                     const LassoParams& params) {
  check_inputs(x, y);
  auto s = standardize(x, y);
  return descend(s, lambda, std::vector<double>(static_cast<std::size_t>(x.cols()), 0.0), params);
}

LassoModel fit_lasso(const Dataset& ds, double lambda, const LassoParams& params) {
  return fit_lasso(ds.feature_matrix(), ds.targets(), lambda, params);
}

std::vector<LassoModel> fit_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       std::span<const double> lambdas, const LassoParams& params) {
  check_inputs(x, y);
  auto s = standardize(x, y);
  std::vector<LassoModel> path;
  path.reserve(lambdas.size());
  std::vector<double> beta(static_cast<std::size_t>(x.cols()), 0.0);
  for (double lambda : lambdas) {
    path.push_back(descend(s, lambda, beta, params));
    beta = path.back().standardized_coefficients;
  }
  return path;
}

LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              std::span<const double> grid, std::size_t folds, std::uint64_t seed,
                              const LassoParams& params) {
  check_inputs(x, y);
  if (grid.empty()) throw InputError("select_lambda: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] > grid[i - 1]) throw InputError("select_lambda: grid must be sorted descending");
  }
  const auto n = static_cast<std::size_t>(x.rows());
  if (folds > n) {
    throw InputError("select_lambda: " + std::to_string(folds) + " folds exceed " + std::to_string(n) +
                     " records");
  }

  LambdaSelection out;
  out.grid.assign(grid.begin(), grid.end());
  out.cv_mse.assign(grid.size(), 0.0);
  if (grid.size() == 1) {
    out.lambda = grid[0];
    out.cv_mse[0] = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  auto plan = kfold_plan(n, folds, 1, seed);
  for (const auto& fold : plan.folds) {
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(fold.train.size()), x.cols());
    Eigen::VectorXd yt(static_cast<Eigen::Index>(fold.train.size()));
    for (std::size_t i = 0; i < fold.train.size(); ++i) {
      xt.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(fold.train[i]));
      yt(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(fold.train[i]));
    }
    auto path = fit_lasso_path(xt, yt, grid, params);
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double sse = 0.0;
      for (std::size_t idx : fold.test) {
        for (std::size_t j = 0; j < row.size(); ++j) {
          row[j] = x(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(j));
        }
        const double e = y(static_cast<Eigen::Index>(idx)) - path[g].predict(row);
        sse += e * e;
      }
      out.cv_mse[g] += sse / static_cast<double>(fold.test.size());
    }
  }
  for (double& v : out.cv_mse) v /= static_cast<double>(plan.folds.size());

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (out.cv_mse[g] < out.cv_mse[best]) best = g;
  }
  out.lambda = grid[best];
  return out;
}

double predict_lasso(const LassoModel& model, std::span<const double> features) {
  return model.predict(features);
}

}  // namespace stereogate
