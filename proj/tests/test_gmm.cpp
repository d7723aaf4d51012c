#include <doctest.h>

#include <cmath>
#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "stereogate/error.hpp"
#include "stereogate/gmm.hpp"
#include "support.hpp"

using namespace stereogate;

namespace {

GmmModel one_d(std::vector<double> weights, std::vector<double> means, std::vector<double> variances) {
  std::vector<GmmComponent> comps;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    GmmComponent g;
    g.weight = weights[c];
    g.mean = Eigen::VectorXd::Constant(1, means[c]);
    g.covariance = Eigen::MatrixXd::Constant(1, 1, variances[c]);
    comps.push_back(g);
  }
  return GmmModel(std::move(comps), {"x"});
}

double at(const GmmModel& m, double x) { return m.log_density(std::vector<double>{x}); }

void check_invariants(const GmmModel& m, double reg) {
  double total = 0.0;
  for (const auto& c : m.components()) {
    total += c.weight;
    CHECK(c.weight > 0.0);
    CHECK(c.weight <= 1.0);
    CHECK((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.covariance);
    CHECK(es.eigenvalues().minCoeff() >= reg * (1.0 - 1e-9));
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

}  // namespace

TEST_CASE("one component is the sample mean and biased covariance") {
  // Well-conditioned data: no eigenvalue is near the floor.
  Rng rng(1);
  const auto x = testing::random_matrix(rng, 40, 3);
  GmmConfig cfg;
  const auto m = fit_gmm(x, 1, cfg);
  REQUIRE(m.size() == 1);
  const Eigen::VectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / 40.0;
  CHECK((m.components()[0].mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.components()[0].covariance - cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.components()[0].weight == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two separated 1-D clusters are recovered") {
  Rng rng(2);
  Eigen::MatrixXd x(200, 1);
  for (int i = 0; i < 200; ++i) x(i, 0) = (i < 100 ? 0.0 : 10.0) + 0.5 * rng.normal();
  GmmConfig cfg;
  cfg.seed = 3;
  const auto m = fit_gmm(x, 2, cfg);
  std::vector<double> means{m.components()[0].mean(0), m.components()[1].mean(0)};
  std::sort(means.begin(), means.end());
  CHECK(std::abs(means[0]) < 0.2);
  CHECK(std::abs(means[1] - 10.0) < 0.2);
  check_invariants(m, cfg.reg);
}

TEST_CASE("eigenvalues below the floor are raised to it") {
  // Rank-one data in 2-D: the sample covariance has a zero eigenvalue.
  Eigen::MatrixXd x(30, 2);
  for (int i = 0; i < 30; ++i) x.row(i) << i, 2.0 * i;
  GmmConfig cfg;
  cfg.reg = 1e-3;
  const auto m = fit_gmm(x, 1, cfg);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.components()[0].covariance);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1e-3).epsilon(1e-9));
  // The other eigenvalue is the variance along (1, 2): 5 * var(0..29).
  CHECK(es.eigenvalues()(1) == doctest::Approx(5.0 * (900.0 - 1.0) / 12.0).epsilon(1e-12));
}

TEST_CASE("fits are deterministic and independent of threads") {
  Rng rng(4);
  const auto x = gen::three_clusters(rng, 90, 2, 6.0);
  GmmConfig a;
  a.seed = 9;
  a.threads = 1;
  GmmConfig b = a;
  b.threads = 3;
  const auto m1 = fit_gmm(x, 3, a), m2 = fit_gmm(x, 3, a), m3 = fit_gmm(x, 3, b);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(m1.components()[c].mean == m2.components()[c].mean);
    CHECK(m1.components()[c].covariance == m3.components()[c].covariance);
    CHECK(m1.components()[c].weight == m3.components()[c].weight);
  }
  CHECK(m1.diagnostics().log_likelihood == m3.diagnostics().log_likelihood);
}

TEST_CASE("log density of simple mixtures") {
  CHECK(at(one_d({1.0}, {0.0}, {1.0}), 0.0) == doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-14));
  CHECK(at(one_d({1.0}, {0.0}, {1.0}), 0.0) == doctest::Approx(-0.9189385332).epsilon(1e-10));
  const auto single = one_d({1.0}, {2.0}, {0.7});
  const auto doubled = one_d({0.5, 0.5}, {2.0, 2.0}, {0.7, 0.7});
  for (double v : {-3.0, 0.0, 2.0, 5.5}) CHECK(at(doubled, v) == doctest::Approx(at(single, v)).epsilon(1e-14));
  // Far in the tail the linear-space value underflows but the log stays exact.
  CHECK(at(single, 1e4) == doctest::Approx(-0.5 * std::log(2 * M_PI * 0.7) - (1e4 - 2) * (1e4 - 2) / 1.4));
  CHECK_THROWS_AS(single.log_density(std::vector<double>{1.0, 2.0}), InputError);
}

TEST_CASE("log density matches a linear-space evaluation") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GmmComponent> comps;
    const std::size_t k = 1 + rng.below(4);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      GmmComponent g;
      g.weight = 0.1 + rng.uniform();
      total += g.weight;
      g.mean = Eigen::VectorXd(3);
      for (int j = 0; j < 3; ++j) g.mean(j) = rng.normal();
      g.covariance = gen::random_spd(rng, 3, 0.3, 2.0);
      comps.push_back(g);
    }
    for (auto& g : comps) g.weight /= total;
    const GmmModel m(comps, {"a", "b", "c"});
    for (int p = 0; p < 20; ++p) {
      Eigen::VectorXd x(3);
      for (int j = 0; j < 3; ++j) x(j) = 1.5 * rng.normal();
      const double expected = std::log(oracle::mixture_density(m, x));
      CHECK(std::abs(m.log_density(std::vector<double>(x.data(), x.data() + 3)) - expected) < 1e-10);
    }
  }
}

TEST_CASE("1-D fitted density integrates to one") {
  Rng rng(6);
  Eigen::MatrixXd x(150, 1);
  for (int i = 0; i < 150; ++i) x(i, 0) = (i % 3 == 0 ? -2.0 : 3.0) + rng.normal();
  GmmConfig cfg;
  const auto m = fit_gmm(x, 2, cfg);
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& c : m.components()) {
    const double s = std::sqrt(c.covariance(0, 0));
    lo = std::min(lo, c.mean(0) - 10 * s);
    hi = std::max(hi, c.mean(0) + 10 * s);
  }
  // Composite Simpson.
  const int steps = 20000;
  const double h = (hi - lo) / steps;
  double sum = std::exp(at(m, lo)) + std::exp(at(m, hi));
  for (int i = 1; i < steps; ++i) sum += (i % 2 ? 4.0 : 2.0) * std::exp(at(m, lo + i * h));
  CHECK(std::abs(sum * h / 3.0 - 1.0) < 1e-4);
}

TEST_CASE("EM traces never decrease and responsibilities sum to one") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t d = 1 + rng.below(4);
    const std::size_t k = 1 + rng.below(6);
    const std::size_t n = 30 + rng.below(100);
    Eigen::MatrixXd x = testing::random_matrix(rng, n, d);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) += 4.0 * static_cast<double>(rng.below(3));
    GmmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.restarts = 3;
    const auto m = fit_gmm(x, k, cfg);
    REQUIRE(m.diagnostics().traces.size() == 3);
    for (const auto& trace : m.diagnostics().traces) {
      REQUIRE(!trace.empty());
      for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] >= trace[t - 1] - 1e-9);
    }
    check_invariants(m, cfg.reg);
    const Eigen::MatrixXd resp = m.responsibilities(x);
    for (Eigen::Index i = 0; i < resp.rows(); ++i) CHECK(std::abs(resp.row(i).sum() - 1.0) <= 1e-12);
    CHECK(m.diagnostics().log_likelihood == doctest::Approx(m.total_log_likelihood(x)).epsilon(1e-12));
  }
}

TEST_CASE("bic uses the full-covariance parameter count") {
  CHECK(gmm_parameter_count(1, 1) == 2);
  CHECK(gmm_parameter_count(3, 2) == 2 + 6 + 9);
  CHECK(gmm_parameter_count(14, 4) == 13 + 56 + 140);
  Rng rng(8);
  Eigen::MatrixXd x(100, 1);
  for (int i = 0; i < 100; ++i) x(i, 0) = rng.normal();
  const auto m = fit_gmm(x, 1, GmmConfig{});
  const double ll = m.total_log_likelihood(x);
  CHECK(bic(m, x) == doctest::Approx(-2 * ll + 2 * std::log(100.0)).epsilon(1e-14));
  // Same rows twice: same per-point likelihood, larger n.
  Eigen::MatrixXd twice(200, 1);
  twice << x, x;
  CHECK(bic(m, twice) > bic(m, x));
  CHECK_THROWS_AS(bic(m, Eigen::MatrixXd::Zero(3, 2)), InputError);
}

TEST_CASE("bic selects three well separated clusters") {
  const std::vector<std::size_t> ks{1, 2, 3, 4, 5, 6};
  int hits = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(100 + static_cast<std::uint64_t>(trial));
    const auto x = gen::three_clusters(rng, 300, 2, 8.0);
    GmmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto sel = select_components(x, ks, cfg);
    REQUIRE(sel.bic_table.size() == 6);
    hits += sel.model.size() == 3;
  }
  CHECK(hits >= 9);
}

TEST_CASE("component selection edges and errors") {
  Rng rng(9);
  const auto x = testing::random_matrix(rng, 20, 2);
  const std::vector<std::size_t> one{1};
  const auto sel = select_components(x, one, GmmConfig{});
  CHECK(sel.model.size() == 1);
  CHECK(sel.bic_table.size() == 1);
  const std::vector<std::size_t> big{1, 21};
  CHECK_THROWS_AS(select_components(x, big, GmmConfig{}), InputError);
  CHECK_THROWS_AS(select_components(x, std::vector<std::size_t>{}, GmmConfig{}), InputError);
  CHECK_THROWS_AS(fit_gmm(x, 0, GmmConfig{}), InputError);
  CHECK_THROWS_AS(fit_gmm(x, 21, GmmConfig{}), InputError);
}

TEST_CASE("identical rows with several components are reported, not fatal") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(10, 2, 1.5);
  GmmConfig cfg;
  const auto m = fit_gmm(x, 3, cfg);
  CHECK(m.diagnostics().degenerate);
  CHECK(std::isfinite(m.log_density(std::vector<double>{1.5, 1.5})));
  check_invariants(m, cfg.reg);
  CHECK_FALSE(fit_gmm(x, 1, cfg).diagnostics().degenerate);
}

TEST_CASE("log-sum-exp is stable") {
  Eigen::VectorXd v(3);
  v << -1000.0, -1000.0, -HUGE_VAL;
  CHECK(log_sum_exp(v) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
  v << 800.0, 800.0, 800.0;
  CHECK(log_sum_exp(v) == doctest::Approx(800.0 + std::log(3.0)).epsilon(1e-15));
}

TEST_CASE("invalid component sets are rejected") {
  GmmComponent g;
  g.weight = 1.0;
  g.mean = Eigen::VectorXd::Zero(2);
  g.covariance = Eigen::MatrixXd::Identity(2, 2);
  CHECK_NOTHROW(GmmModel({g}, {"a", "b"}));
  CHECK_THROWS_AS(GmmModel({g}, {"a"}), InputError);
  auto bad = g;
  bad.covariance(1, 1) = -1.0;
  CHECK_THROWS_AS(GmmModel({bad}, {"a", "b"}), NumericalError);
  bad = g;
  bad.weight = 0.0;
  CHECK_THROWS_AS(GmmModel({bad}, {"a", "b"}), InputError);
}
