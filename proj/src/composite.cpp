#include "stereogate/composite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stereogate/error.hpp"
#include "stereogate/rng.hpp"

namespace stereogate {

std::string_view to_string(Predictor p) {
  switch (p) {
    case Predictor::lasso: return "LASSO";
    case Predictor::nucleophile_rf: return "NUCLEOPHILE_RF";
    case Predictor::overall_rf: return "OVERALL_RF";
  }
  return "UNKNOWN";
}

Predictor parse_predictor(std::string_view text) {
  for (Predictor p : kAllPredictors) {
    if (to_string(p) == text) return p;
  }
  throw InputError("unknown predictor '" + std::string(text) + "'");
}

Predictor route(double imine_log_density, double nucleophile_log_density) {
  if (!std::isfinite(imine_log_density) || !std::isfinite(nucleophile_log_density)) {
    throw InputError("route: log densities must be finite");
  }
  if (!(nucleophile_log_density > 0.0)) return Predictor::lasso;
  return imine_log_density > 0.0 ? Predictor::overall_rf : Predictor::nucleophile_rf;
}

GateDecision make_gate_decision(double imine_log_density, double nucleophile_log_density) {
  GateDecision d;
  d.choice = route(imine_log_density, nucleophile_log_density);
  d.imine_log_density = imine_log_density;
  d.nucleophile_log_density = nucleophile_log_density;
  d.imine_high = imine_log_density > 0.0;
  d.nucleophile_high = nucleophile_log_density > 0.0;
  return d;
}

std::vector<std::size_t> CompositeConfig::default_k_range() {
  std::vector<std::size_t> ks(20);
  std::iota(ks.begin(), ks.end(), std::size_t{1});
  return ks;
}

std::vector<std::size_t> gating_columns(const FeatureSchema& schema, std::span<const std::string> names,
                                        FeatureRole role) {
  if (names.empty()) throw InputError("gating feature list for role '" + std::string(to_string(role)) + "' is empty");
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    auto idx = schema.index_of(name);
    if (!idx) throw InputError("missing gating feature '" + name + "'");
    if (schema[*idx].role != role) {
      throw InputError("gating feature '" + name + "' has role '" + std::string(to_string(schema[*idx].role)) +
                       "', expected '" + std::string(to_string(role)) + "'");
    }
    if (std::find(cols.begin(), cols.end(), *idx) != cols.end()) {
      throw InputError("gating feature '" + name + "' listed twice");
    }
    cols.push_back(*idx);
  }
  return cols;
}

namespace {

std::vector<std::string> names_of(const FeatureSchema& schema, const std::vector<std::size_t>& cols) {
  std::vector<std::string> out;
  for (std::size_t c : cols) out.push_back(schema[c].name);
  return out;
}

const FeatureRole kNonImineRoles[] = {FeatureRole::nucleophile, FeatureRole::catalyst, FeatureRole::solvent,
                                      FeatureRole::reaction_variable};

}  // namespace

CompositeModel::CompositeModel(FeatureSchema schema, LassoModel lasso, RandomForest rf_overall,
                               RandomForest rf_nucleophile, GmmModel gmm_imine, GmmModel gmm_nucleophile,
                               CompositeTraining training)
    : schema_(std::move(schema)),
      lasso_(std::move(lasso)),
      rf_overall_(std::move(rf_overall)),
      rf_nucleophile_(std::move(rf_nucleophile)),
      gmm_imine_(std::move(gmm_imine)),
      gmm_nucleophile_(std::move(gmm_nucleophile)),
      training_(std::move(training)) {
  nucleophile_rf_columns_ = columns_with_roles(schema_, kNonImineRoles);
  imine_gate_columns_ = gating_columns(schema_, gmm_imine_.feature_names(), FeatureRole::imine);
  nucleophile_gate_columns_ = gating_columns(schema_, gmm_nucleophile_.feature_names(), FeatureRole::nucleophile);
  if (lasso_.coefficients.size() != schema_.size() || rf_overall_.num_features() != schema_.size() ||
      rf_nucleophile_.num_features() != nucleophile_rf_columns_.size() ||
      rf_overall_.task() != TreeTask::regression || rf_nucleophile_.task() != TreeTask::regression) {
    throw InputError("composite model: sub-model shapes do not match the schema");
  }
}

void CompositeModel::check_width(std::span<const double> features) const {
  if (features.size() != schema_.size()) {
    throw InputError("composite predict: expected " + std::to_string(schema_.size()) + " features, got " +
                     std::to_string(features.size()));
  }
}

std::vector<double> CompositeModel::gather(std::span<const double> features,
                                           const std::vector<std::size_t>& cols) const {
  std::vector<double> out;
  out.reserve(cols.size());
  for (std::size_t c : cols) out.push_back(features[c]);
  return out;
}

double CompositeModel::imine_log_density(std::span<const double> features) const {
  check_width(features);
  return gmm_imine_.log_density(gather(features, imine_gate_columns_));
}

double CompositeModel::nucleophile_log_density(std::span<const double> features) const {
  check_width(features);
  return gmm_nucleophile_.log_density(gather(features, nucleophile_gate_columns_));
}

GateDecision CompositeModel::gate(std::span<const double> features) const {
  return make_gate_decision(imine_log_density(features), nucleophile_log_density(features));
}

double CompositeModel::predict_with(Predictor which, std::span<const double> features) const {
  check_width(features);
  switch (which) {
    case Predictor::lasso: return lasso_.predict(features);
    case Predictor::overall_rf: return rf_overall_.predict(features);
    case Predictor::nucleophile_rf: return rf_nucleophile_.predict(gather(features, nucleophile_rf_columns_));
  }
  throw InputError("unknown predictor");
}

CompositePrediction CompositeModel::predict(std::span<const double> features) const {
  CompositePrediction out;
  out.decision = gate(features);
  out.value = predict_with(out.decision.choice, features);
  return out;
}

GroupPrediction CompositeModel::predict_group(std::span<const std::vector<double>> group) const {
  if (group.empty()) throw InputError("predict_group: empty group");
  double imine_sum = 0.0;
  double nucleophile_sum = 0.0;
  for (const auto& f : group) {
    imine_sum += imine_log_density(f);
    nucleophile_sum += nucleophile_log_density(f);
  }
  const double count = static_cast<double>(group.size());
  GroupPrediction out;
  out.decision = make_gate_decision(imine_sum / count, nucleophile_sum / count);
  out.values.reserve(group.size());
  for (const auto& f : group) out.values.push_back(predict_with(out.decision.choice, f));
  return out;
}

GroupPrediction CompositeModel::predict_group(const Dataset& group) const {
  if (!(group.schema() == schema_)) throw InputError("predict_group: schema mismatch");
  std::vector<std::vector<double>> rows;
  rows.reserve(group.size());
  for (const auto& r : group.records()) rows.push_back(r.features);
  return predict_group(rows);
}

CompositeModel train_composite(const Dataset& ds, const CompositeConfig& cfg) {
  if (ds.size() < 2) throw InputError("train_composite: at least 2 records are required");
  if (!ds.has_targets()) throw InputError("train_composite: dataset has no ddg column");
  const auto& schema = ds.schema();
  const auto imine_cols = gating_columns(schema, cfg.imine_features, FeatureRole::imine);
  const auto nucleophile_cols = gating_columns(schema, cfg.nucleophile_features, FeatureRole::nucleophile);

  const Eigen::MatrixXd x = ds.feature_matrix();
  const Eigen::VectorXd y = ds.targets();
  const std::span<const double> y_span(y.data(), static_cast<std::size_t>(y.size()));
  const auto n = static_cast<std::size_t>(x.rows());
  CompositeTraining training;
  training.records = n;

  // LASSO on all features.
  LassoModel lasso;
  if (cfg.lasso.lambda) {
    training.lambda = *cfg.lasso.lambda;
  } else {
    auto grid = lambda_grid(x, y, cfg.lasso.grid_size, cfg.lasso.grid_ratio);
    const std::size_t folds = std::clamp<std::size_t>(cfg.lasso.cv_folds, 2, n);
    auto sel = select_lambda(x, y, grid, folds, derive_seed(cfg.seed, 1), cfg.lasso.params);
    training.lambda = sel.lambda;
    training.lambda_grid = std::move(sel.grid);
    training.lambda_cv_mse = std::move(sel.cv_mse);
  }
  lasso = fit_lasso(x, y, training.lambda, cfg.lasso.params);

  ForestParams overall = cfg.rf_overall;
  overall.seed = derive_seed(cfg.seed, 2);
  if (cfg.threads) overall.threads = cfg.threads;
  RandomForest rf_overall = fit_rf(x, y_span, overall);

  const auto nuc_cols = columns_with_roles(schema, kNonImineRoles);
  Eigen::MatrixXd x_nuc(x.rows(), static_cast<Eigen::Index>(nuc_cols.size()));
  for (std::size_t j = 0; j < nuc_cols.size(); ++j) {
    x_nuc.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(nuc_cols[j]));
  }
  ForestParams nucleophile = cfg.rf_nucleophile;
  nucleophile.seed = derive_seed(cfg.seed, 3);
  if (cfg.threads) nucleophile.threads = cfg.threads;
  RandomForest rf_nucleophile = fit_rf(x_nuc, y_span, nucleophile);

  auto fit_gate = [&](const std::vector<std::size_t>& cols, std::optional<std::size_t> fixed,
                      std::uint64_t seed, std::vector<std::pair<std::size_t, double>>& table) {
    Eigen::MatrixXd rows(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      rows.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(cols[j]));
    }
    GmmConfig gcfg = cfg.gmm;
    gcfg.seed = seed;
    if (cfg.threads) gcfg.threads = cfg.threads;
    if (fixed) {
      GmmModel m = fit_gmm(rows, *fixed, gcfg, names_of(schema, cols));
      table.emplace_back(*fixed, bic(m, rows));
      return m;
    }
    std::vector<std::size_t> ks;
    for (std::size_t k : cfg.k_range) {
      if (k >= 1 && k <= n) ks.push_back(k);
    }
    if (ks.empty()) throw InputError("train_composite: no usable component count in k_range");
    auto sel = select_components(rows, ks, gcfg, names_of(schema, cols));
    table = std::move(sel.bic_table);
    return std::move(sel.model);
  };
  GmmModel gmm_imine = fit_gate(imine_cols, cfg.imine_components, derive_seed(cfg.seed, 4), training.imine_bic);
  GmmModel gmm_nucleophile =
      fit_gate(nucleophile_cols, cfg.nucleophile_components, derive_seed(cfg.seed, 5), training.nucleophile_bic);

  return CompositeModel(schema, std::move(lasso), std::move(rf_overall), std::move(rf_nucleophile),
                        std::move(gmm_imine), std::move(gmm_nucleophile), std::move(training));
}

}  // namespace stereogate
