#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace stereogate {

struct GmmConfig {
  std::size_t max_iter = 500;
  // EM stops when the mean per-point log-likelihood improves by less than tol.
  double tol = 1e-6;
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
  // Eigenvalue floor for every covariance; smaller eigenvalues are raised to
  // it after each M-step.
  double reg = 1e-6;
  std::size_t threads = 0;
};

struct GmmComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct GmmDiagnostics {
  // Total log-likelihood of the training rows under the returned model.
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // All training rows identical while k > 1; the components then coincide.
  bool degenerate = false;
  std::size_t best_restart = 0;
  // Per-restart log-likelihood after every E-step. Not persisted.
  std::vector<std::vector<double>> traces;
};

// Full-covariance Gaussian mixture over a named feature subset.
class GmmModel {
 public:
  GmmModel() = default;
  // Throws InputError when dimensions disagree or weights are not positive,
  // and NumericalError when a covariance is not positive definite.
  GmmModel(std::vector<GmmComponent> components, std::vector<std::string> feature_names,
           GmmDiagnostics diagnostics = {});

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const std::vector<GmmComponent>& components() const { return components_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const GmmDiagnostics& diagnostics() const { return diagnostics_; }

  // ln sum_c w_c N(x; mu_c, Sigma_c), evaluated with log-sum-exp.
  double log_density(std::span<const double> x) const;
  // Per-component ln w_c + ln N(x; mu_c, Sigma_c).
  Eigen::VectorXd component_log_densities(std::span<const double> x) const;
  double total_log_likelihood(const Eigen::MatrixXd& rows) const;
  // n x k posterior membership probabilities.
  Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& rows) const;
  // Fills resp with responsibilities and returns the total log-likelihood.
  double e_step(const Eigen::MatrixXd& rows, Eigen::MatrixXd& resp) const;

 private:
  Eigen::MatrixXd log_prob_matrix(const Eigen::MatrixXd& rows) const;

  std::size_t dim_ = 0;
  std::vector<GmmComponent> components_;
  std::vector<std::string> feature_names_;
  GmmDiagnostics diagnostics_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
  std::vector<double> log_norms_;
};

// EM from k-means++ seeded centers, best final log-likelihood over
// cfg.restarts runs (restart r uses derive_seed(cfg.seed, r)).
GmmModel fit_gmm(const Eigen::MatrixXd& rows, std::size_t k, const GmmConfig& cfg,
                 std::vector<std::string> feature_names = {});

// (k-1) + k*d + k*d(d+1)/2
std::size_t gmm_parameter_count(std::size_t k, std::size_t d);

// -2 lnL + m ln n
double bic(const GmmModel& model, const Eigen::MatrixXd& rows);

struct ComponentSelection {
  GmmModel model;
  std::vector<std::pair<std::size_t, double>> bic_table;
};

// Fits each k (ascending) and keeps the lowest BIC; ties go to smaller k.
ComponentSelection select_components(const Eigen::MatrixXd& rows, std::span<const std::size_t> k_range,
                                     const GmmConfig& cfg, std::vector<std::string> feature_names = {});

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace stereogate
