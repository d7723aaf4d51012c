#include "stereogate/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "stereogate/error.hpp"
#include "stereogate/parallel.hpp"
#include "stereogate/rng.hpp"

namespace stereogate {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows) {
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(rows.rows());
  return (cov + cov.transpose()) / 2.0;
}

// Nearest matrix (for the Gaussian likelihood) whose eigenvalues are all at
// least reg: eigenvalues below the floor are raised to it. This maximizes the
// M-step objective over the feasible set, so EM stays monotone, which adding
// reg to the diagonal does not guarantee. The small margin absorbs rounding
// in the reconstruction.
Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& cov, double reg) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd values = es.eigenvalues();
  const double margin = 64.0 * std::numeric_limits<double>::epsilon() * std::max(values.cwiseAbs().maxCoeff(), reg) *
                        static_cast<double>(cov.rows());
  const double floor = reg + margin;
  if (values.minCoeff() >= floor) return cov;
  const Eigen::VectorXd clipped = values.cwiseMax(floor);
  const Eigen::MatrixXd out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return (out + out.transpose()) / 2.0;
}

std::vector<Eigen::VectorXd> kmeanspp_centers(const Eigen::MatrixXd& rows, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(rows.rows());
  std::vector<Eigen::VectorXd> centers;
  centers.reserve(k);
  centers.push_back(rows.row(static_cast<Eigen::Index>(rng.below(n))).transpose());
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    const Eigen::VectorXd& last = centers.back();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (rows.row(static_cast<Eigen::Index>(i)).transpose() - last).squaredNorm();
      dist[i] = std::min(dist[i], d);
      total += dist[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    centers.push_back(rows.row(static_cast<Eigen::Index>(pick)).transpose());
  }
  return centers;
}

struct EmRun {
  std::vector<GmmComponent> components;
  std::vector<double> trace;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

EmRun run_em(const Eigen::MatrixXd& rows, std::size_t k, const GmmConfig& cfg, std::uint64_t seed) {
  const auto n = rows.rows();
  const double nd = static_cast<double>(n);
  Rng rng(seed);

  const Eigen::MatrixXd base_cov = floor_eigenvalues(sample_covariance(rows), cfg.reg);
  std::vector<GmmComponent> comps;
  for (auto& c : kmeanspp_centers(rows, k, rng)) {
    comps.push_back({1.0 / static_cast<double>(k), std::move(c), base_cov});
  }

  EmRun run;
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd resp(n, kk);
  for (std::size_t iter = 0;; ++iter) {
    const double ll = GmmModel(comps, {}).e_step(rows, resp);
    run.trace.push_back(ll);
    if (iter > 0 && ll - run.log_likelihood < cfg.tol * nd) {
      run.log_likelihood = ll;
      run.converged = true;
      break;
    }
    run.log_likelihood = ll;
    if (iter == cfg.max_iter) break;

    // M-step.
    const double tiny = 10.0 * std::numeric_limits<double>::epsilon();
    Eigen::VectorXd nk = resp.colwise().sum().transpose().array() + tiny;
    const double nk_total = nk.sum();
    for (Eigen::Index c = 0; c < kk; ++c) {
      auto& comp = comps[static_cast<std::size_t>(c)];
      comp.weight = nk(c) / nk_total;
      comp.mean = (rows.transpose() * resp.col(c)) / nk(c);
      const Eigen::MatrixXd centered = rows.rowwise() - comp.mean.transpose();
      Eigen::MatrixXd cov = centered.transpose() * (centered.array().colwise() * resp.col(c).array()).matrix();
      cov /= nk(c);
      comp.covariance = floor_eigenvalues((cov + cov.transpose()) / 2.0, cfg.reg);
    }
    run.iterations = iter + 1;
  }
  run.components = std::move(comps);
  return run;
}

}  // namespace

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const double top = values.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((values.array() - top).exp().sum());
}

GmmModel::GmmModel(std::vector<GmmComponent> components, std::vector<std::string> feature_names,
                   GmmDiagnostics diagnostics)
    : components_(std::move(components)),
      feature_names_(std::move(feature_names)),
      diagnostics_(std::move(diagnostics)) {
  if (components_.empty()) throw InputError("gmm: at least one component is required");
  dim_ = static_cast<std::size_t>(components_.front().mean.size());
  if (dim_ == 0) throw InputError("gmm: zero-dimensional component");
  if (!feature_names_.empty() && feature_names_.size() != dim_) {
    throw InputError("gmm: feature name count does not match dimension");
  }
  const double d = static_cast<double>(dim_);
  for (const auto& c : components_) {
    if (static_cast<std::size_t>(c.mean.size()) != dim_ || static_cast<std::size_t>(c.covariance.rows()) != dim_ ||
        static_cast<std::size_t>(c.covariance.cols()) != dim_) {
      throw InputError("gmm: inconsistent component dimensions");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw InputError("gmm: weights must be positive");
    if (!c.mean.allFinite() || !c.covariance.allFinite()) throw InputError("gmm: non-finite parameters");
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) throw NumericalError("gmm: covariance is not positive definite");
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    double log_det = 2.0 * diag.array().log().sum();
    log_norms_.push_back(std::log(c.weight) - 0.5 * (d * kLog2Pi + log_det));
    factors_.push_back(std::move(llt));
  }
}

Eigen::VectorXd GmmModel::component_log_densities(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw InputError("gmm: expected " + std::to_string(dim_) + " values, got " + std::to_string(x.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> point(x.data(), static_cast<Eigen::Index>(dim_));
  Eigen::VectorXd out(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const Eigen::VectorXd diff = point - components_[c].mean;
    const Eigen::VectorXd z = factors_[c].matrixL().solve(diff);
    out(static_cast<Eigen::Index>(c)) = log_norms_[c] - 0.5 * z.squaredNorm();
  }
  return out;
}

double GmmModel::log_density(std::span<const double> x) const { return log_sum_exp(component_log_densities(x)); }

Eigen::MatrixXd GmmModel::log_prob_matrix(const Eigen::MatrixXd& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != dim_) {
    throw InputError("gmm: expected " + std::to_string(dim_) + " columns, got " + std::to_string(rows.cols()));
  }
  Eigen::MatrixXd out(rows.rows(), static_cast<Eigen::Index>(components_.size()));
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const Eigen::MatrixXd diff = (rows.rowwise() - components_[c].mean.transpose()).transpose();
    const Eigen::MatrixXd z = factors_[c].matrixL().solve(diff);
    out.col(static_cast<Eigen::Index>(c)) =
        (log_norms_[c] - 0.5 * z.colwise().squaredNorm().array()).transpose();
  }
  return out;
}

double GmmModel::e_step(const Eigen::MatrixXd& rows, Eigen::MatrixXd& resp) const {
  resp = log_prob_matrix(rows);
  double total = 0.0;
  for (Eigen::Index i = 0; i < resp.rows(); ++i) {
    const double norm = log_sum_exp(resp.row(i).transpose());
    resp.row(i) = (resp.row(i).array() - norm).exp();
    total += norm;
  }
  return total;
}

double GmmModel::total_log_likelihood(const Eigen::MatrixXd& rows) const {
  const Eigen::MatrixXd lp = log_prob_matrix(rows);
  double total = 0.0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) total += log_sum_exp(lp.row(i).transpose());
  return total;
}

Eigen::MatrixXd GmmModel::responsibilities(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd resp;
  e_step(rows, resp);
  return resp;
}

GmmModel fit_gmm(const Eigen::MatrixXd& rows, std::size_t k, const GmmConfig& cfg,
                 std::vector<std::string> feature_names) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (k == 0) throw InputError("fit_gmm: k must be >= 1");
  if (k > n) {
    throw InputError("fit_gmm: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
  }
  if (rows.cols() == 0) throw InputError("fit_gmm: no features");
  if (!rows.allFinite()) throw InputError("fit_gmm: non-finite input");
  if (cfg.restarts == 0) throw InputError("fit_gmm: restarts must be >= 1");
  if (!(cfg.reg >= 0.0) || !std::isfinite(cfg.reg)) throw InputError("fit_gmm: reg must be finite and >= 0");

  std::vector<EmRun> runs(cfg.restarts);
  parallel_for(cfg.restarts, cfg.threads,
               [&](std::size_t r) { runs[r] = run_em(rows, k, cfg, derive_seed(cfg.seed, r)); });

  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].log_likelihood > runs[best].log_likelihood) best = r;
  }
  GmmDiagnostics diag;
  diag.log_likelihood = runs[best].log_likelihood;
  diag.iterations = runs[best].iterations;
  diag.converged = runs[best].converged;
  diag.best_restart = best;
  diag.degenerate = k > 1 && (rows.rowwise() - rows.row(0)).cwiseAbs().maxCoeff() == 0.0;
  for (auto& r : runs) diag.traces.push_back(std::move(r.trace));
  return GmmModel(std::move(runs[best].components), std::move(feature_names), std::move(diag));
}

std::size_t gmm_parameter_count(std::size_t k, std::size_t d) {
  return (k - 1) + k * d + k * d * (d + 1) / 2;
}

double bic(const GmmModel& model, const Eigen::MatrixXd& rows) {
  const double ll = model.total_log_likelihood(rows);
  const double m = static_cast<double>(gmm_parameter_count(model.size(), model.dimension()));
  return -2.0 * ll + m * std::log(static_cast<double>(rows.rows()));
}

ComponentSelection select_components(const Eigen::MatrixXd& rows, std::span<const std::size_t> k_range,
                                     const GmmConfig& cfg, std::vector<std::string> feature_names) {
  if (k_range.empty()) throw InputError("select_components: empty k range");
  std::vector<std::size_t> ks(k_range.begin(), k_range.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.back() > static_cast<std::size_t>(rows.rows())) {
    throw InputError("select_components: k = " + std::to_string(ks.back()) + " exceeds " +
                     std::to_string(rows.rows()) + " rows");
  }
  ComponentSelection out;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t k : ks) {
    GmmConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(cfg.seed, k);
    GmmModel model = fit_gmm(rows, k, run_cfg, feature_names);
    const double score = bic(model, rows);
    out.bic_table.emplace_back(k, score);
    if (score < best_bic || out.bic_table.size() == 1) {
      best_bic = score;
      out.model = std::move(model);
    }
  }
  return out;
}

}  // namespace stereogate
