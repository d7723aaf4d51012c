#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stereogate/dataset.hpp"

namespace stereogate {

struct LassoParams {
  double tol = 1e-7;
  std::size_t max_iter = 10000;
};

// L1-penalized least squares fitted by cyclic coordinate descent.
//
// Objective, on features standardized to zero mean and unit (population)
// variance, with an unpenalized intercept:
//
//   (1/2n) * sum_i (y_i - b - z_i . beta)^2 + lambda * sum_j |beta_j|
//
// coefficients/intercept are mapped back to original feature units.
// Constant columns have scale 0 and a coefficient of exactly zero.
struct LassoModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<double> means;
  std::vector<double> scales;
  std::vector<double> standardized_coefficients;
  std::size_t iterations = 0;
  bool converged = false;

  double predict(std::span<const double> features) const;
  std::size_t nonzero_count() const;
};

// max_j |z_j . (y - mean(y))| / n over non-constant standardized columns.
// Any lambda at or above this yields the all-zero model.
double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// count log-spaced values from lambda_max down to lambda_max * ratio,
// descending. Falls back to a grid anchored at 1 when lambda_max is 0.
std::vector<double> lambda_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::size_t count = 50, double ratio = 1e-4);

LassoModel fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                     const LassoParams& params = {});
LassoModel fit_lasso(const Dataset& ds, double lambda, const LassoParams& params = {});

// Fits every lambda of a descending grid, each warm-started from the
// previous solution.
std::vector<LassoModel> fit_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       std::span<const double> lambdas,
                                       const LassoParams& params = {});

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_mse;
};

// k-fold CV over a descending grid; the minimum mean validation MSE wins,
// ties going to the larger lambda.
LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              std::span<const double> grid, std::size_t folds, std::uint64_t seed,
                              const LassoParams& params = {});

double predict_lasso(const LassoModel& model, std::span<const double> features);

}  // namespace stereogate
