#include <doctest.h>

#include <cmath>

#include "stereogate/error.hpp"
#include "stereogate/lasso.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace stereogate;


TEST_CASE("exact interpolation at lambda 0") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const auto m = fit_lasso(x, y, 0.0);
  CHECK(m.coefficients[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(m.intercept) < 1e-8);
  CHECK(m.converged);
}

TEST_CASE("one standardized feature is soft-thresholded") {
  // x has mean 0 and population SD 1, so z = x; OLS slope is 2.
  Eigen::MatrixXd x(4, 1);
  x << -1, 1, -1, 1;
  Eigen::VectorXd y(4);
  y << -2, 2, -2, 2;
  const double lambda = 0.5;
  const auto m = fit_lasso(x, y, lambda);
  CHECK(m.standardized_coefficients[0] == doctest::Approx(1.5).epsilon(1e-12));

  // Grid search of the 1-D objective.
  double best_beta = 0.0, best = 1e300;
  for (int i = 0; i <= 30000; ++i) {
    const double beta = i * 1e-4;
    double sse = 0.0;
    for (int k = 0; k < 4; ++k) sse += std::pow(y(k) - beta * x(k, 0), 2);
    const double obj = sse / 8.0 + lambda * beta;
    if (obj < best) {
      best = obj;
      best_beta = beta;
    }
  }
  CHECK(m.standardized_coefficients[0] == doctest::Approx(best_beta).epsilon(1e-4));
}

TEST_CASE("lambda at or above lambda_max gives the all-zero model") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto x = testing::random_matrix(rng, 30, 5);
    Eigen::VectorXd y = x.col(0) * 2.0 + x.col(3);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += rng.normal();
    const double lmax = lambda_max(x, y);
    for (double scale : {1.0, 1.5, 10.0}) {
      const auto m = fit_lasso(x, y, lmax * scale);
      CHECK(m.nonzero_count() == 0);
      CHECK(m.intercept == doctest::Approx(y.mean()).epsilon(1e-12));
    }
    CHECK(fit_lasso(x, y, lmax * 0.99).nonzero_count() >= 1);
  }
}

TEST_CASE("fitted models satisfy the KKT conditions") {
  Rng rng(11);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 5 + rng.below(80);
    const std::size_t p = 1 + rng.below(20);
    const auto x = testing::random_matrix(rng, n, p);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = x(i, 0) - 0.5 * x(i, static_cast<Eigen::Index>(p - 1)) + rng.normal();
    const double lambda = lambda_max(x, y) * std::pow(10.0, -3.0 * rng.uniform());
    // Near-square problems at small lambda need far more sweeps than the
    // default budget.
    LassoParams params;
    params.max_iter = 1'000'000;
    const auto m = fit_lasso(x, y, lambda, params);
    INFO("n=" << n << " p=" << p << " ratio=" << lambda / lambda_max(x, y) << " kkt=" << oracle::lasso_kkt_violation(m, x, y));
    REQUIRE(m.converged);
    CHECK(oracle::lasso_kkt_violation(m, x, y) <= 10 * params.tol);
  }
}

TEST_CASE("lambda 0 on a full-rank problem matches the normal equations") {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const auto x = testing::random_matrix(rng, 40, 4);
    Eigen::VectorXd y(40);
    for (Eigen::Index i = 0; i < 40; ++i) y(i) = 1.0 + x.row(i).sum() + 0.3 * rng.normal();
    Eigen::MatrixXd a(40, 5);
    a.col(0).setOnes();
    a.rightCols(4) = x;
    const Eigen::VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    const auto m = fit_lasso(x, y, 0.0);
    CHECK(m.intercept == doctest::Approx(beta(0)).epsilon(1e-6));
    for (int j = 0; j < 4; ++j) CHECK(std::abs(m.coefficients[static_cast<std::size_t>(j)] - beta(j + 1)) < 1e-6);
  }
}

TEST_CASE("nonzero count is non-increasing in lambda along the path") {
  Rng rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto x = testing::random_matrix(rng, 60, 12);
    Eigen::VectorXd y(60);
    for (Eigen::Index i = 0; i < 60; ++i) y(i) = 3 * x(i, 0) - 2 * x(i, 1) + x(i, 2) + 0.5 * x(i, 3) + rng.normal();
    const auto grid = lambda_grid(x, y, 30, 1e-3);
    const auto path = fit_lasso_path(x, y, grid);
    for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i].nonzero_count() >= path[i - 1].nonzero_count());
    CHECK(path.front().nonzero_count() == 0);
  }
}

TEST_CASE("constant columns receive a zero coefficient") {
  Rng rng(2);
  auto x = testing::random_matrix(rng, 20, 3);
  x.col(1).setConstant(4.0);
  Eigen::VectorXd y = x.col(0) + x.col(2);
  const auto m = fit_lasso(x, y, 0.01);
  CHECK(m.scales[1] == 0.0);
  CHECK(m.coefficients[1] == 0.0);
}

TEST_CASE("lambda grid is descending and log-spaced") {
  Rng rng(4);
  const auto x = testing::random_matrix(rng, 30, 3);
  const Eigen::VectorXd y = x.col(0);
  const auto g = lambda_grid(x, y);
  REQUIRE(g.size() == 50);
  CHECK(g.front() == lambda_max(x, y));
  CHECK(g.back() == doctest::Approx(g.front() * 1e-4).epsilon(1e-12));
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] < g[i - 1]);
    CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]).epsilon(1e-9));
  }
}

TEST_CASE("select_lambda") {
  Rng rng(6);
  const auto x = testing::random_matrix(rng, 40, 3);
  const Eigen::VectorXd y = 2 * x.col(0) - x.col(1);

  const double single[] = {0.3};
  CHECK(select_lambda(x, y, single, 5, 1).lambda == 0.3);

  const double two[] = {10.0, 1e-6};
  const auto sel = select_lambda(x, y, two, 5, 1);
  CHECK(sel.lambda == 1e-6);
  CHECK(sel.cv_mse[1] < 1e-8);

  // Constant target: every lambda predicts the fold mean, so all tie.
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(40, 1.25);
  const double tied[] = {5.0, 1.0, 0.1};
  CHECK(select_lambda(x, flat, tied, 4, 1).lambda == 5.0);

  CHECK_THROWS_AS(select_lambda(x, y, two, 41, 1), InputError);
  const double ascending[] = {1.0, 2.0};
  CHECK_THROWS_AS(select_lambda(x, y, ascending, 5, 1), InputError);
}

TEST_CASE("prediction arithmetic and input checks") {
  LassoModel m;
  m.coefficients = {2.0, -1.0};
  m.intercept = 0.0;
  const double in[] = {3.0, 4.0};
  CHECK(predict_lasso(m, in) == 2.0);
  m.coefficients = {0.0, 0.0};
  m.intercept = 1.7;
  CHECK(m.predict(in) == 1.7);
  const double short_in[] = {1.0};
  CHECK_THROWS_AS(m.predict(short_in), InputError);

  Eigen::MatrixXd x(2, 1);
  x << 1, std::nan("");
  Eigen::VectorXd y(2);
  y << 1, 2;
  CHECK_THROWS_AS(fit_lasso(x, y, 0.1), InputError);
  CHECK_THROWS_AS(fit_lasso(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), 0.1), InputError);
  Rng r1(1);
  CHECK_THROWS_AS(fit_lasso(testing::random_matrix(r1, 3, 1), Eigen::VectorXd::Ones(3), -1.0), InputError);
}
