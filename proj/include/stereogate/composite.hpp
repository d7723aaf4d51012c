#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stereogate/dataset.hpp"
#include "stereogate/forest.hpp"
#include "stereogate/gmm.hpp"
#include "stereogate/lasso.hpp"

namespace stereogate {

enum class Predictor { lasso, nucleophile_rf, overall_rf };

inline constexpr Predictor kAllPredictors[] = {Predictor::lasso, Predictor::nucleophile_rf,
                                               Predictor::overall_rf};

// "LASSO", "NUCLEOPHILE_RF", "OVERALL_RF".
std::string_view to_string(Predictor p);
Predictor parse_predictor(std::string_view text);

// A log density is "high" when strictly positive, i.e. density > 1.
struct GateDecision {
  double imine_log_density = 0.0;
  double nucleophile_log_density = 0.0;
  bool imine_high = false;
  bool nucleophile_high = false;
  Predictor choice = Predictor::lasso;
};

// nucleophile low                -> LASSO
// nucleophile high, imine high   -> OVERALL_RF
// nucleophile high, imine low    -> NUCLEOPHILE_RF
// Throws InputError on non-finite input.
Predictor route(double imine_log_density, double nucleophile_log_density);
GateDecision make_gate_decision(double imine_log_density, double nucleophile_log_density);

struct LassoSettings {
  // Fixed penalty; when unset it is chosen by k-fold CV over a log grid.
  std::optional<double> lambda;
  std::size_t grid_size = 50;
  double grid_ratio = 1e-4;
  std::size_t cv_folds = 5;
  LassoParams params;
};

struct CompositeConfig {
  LassoSettings lasso;
  ForestParams rf_overall;
  ForestParams rf_nucleophile;
  GmmConfig gmm;
  // Candidate component counts; values above the training row count are
  // dropped.
  std::vector<std::size_t> k_range = default_k_range();
  std::optional<std::size_t> imine_components;
  std::optional<std::size_t> nucleophile_components;
  std::vector<std::string> imine_features{"C", "SL", "PG"};
  std::vector<std::string> nucleophile_features{"H-X-Nu", "H-X-CNu", "Nu", "Polarizability"};
  // Sub-model seeds are derive_seed(seed, 1..5); the seed fields inside
  // rf_overall, rf_nucleophile and gmm are overwritten.
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  static std::vector<std::size_t> default_k_range();
};

struct CompositeTraining {
  double lambda = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> lambda_cv_mse;
  std::vector<std::pair<std::size_t, double>> imine_bic;
  std::vector<std::pair<std::size_t, double>> nucleophile_bic;
  std::size_t records = 0;
};

struct CompositePrediction {
  double value = 0.0;
  GateDecision decision;
};

struct GroupPrediction {
  std::vector<double> values;
  GateDecision decision;
};

// LASSO, an all-feature random forest and an imine-free random forest,
// gated by two Gaussian mixtures over the imine and nucleophile gating
// features. Immutable after construction.
class CompositeModel {
 public:
  CompositeModel() = default;
  CompositeModel(FeatureSchema schema, LassoModel lasso, RandomForest rf_overall, RandomForest rf_nucleophile,
                 GmmModel gmm_imine, GmmModel gmm_nucleophile, CompositeTraining training = {});

  const FeatureSchema& schema() const { return schema_; }
  const LassoModel& lasso() const { return lasso_; }
  const RandomForest& rf_overall() const { return rf_overall_; }
  const RandomForest& rf_nucleophile() const { return rf_nucleophile_; }
  const GmmModel& gmm_imine() const { return gmm_imine_; }
  const GmmModel& gmm_nucleophile() const { return gmm_nucleophile_; }
  const CompositeTraining& training() const { return training_; }
  // Schema columns fed to the nucleophile-focused forest.
  const std::vector<std::size_t>& nucleophile_rf_columns() const { return nucleophile_rf_columns_; }

  double imine_log_density(std::span<const double> features) const;
  double nucleophile_log_density(std::span<const double> features) const;
  GateDecision gate(std::span<const double> features) const;

  // Output of one sub-model on a full schema-aligned feature vector.
  double predict_with(Predictor which, std::span<const double> features) const;

  // Per-record gating.
  CompositePrediction predict(std::span<const double> features) const;
  // Gates once on the group's mean log densities and applies the chosen
  // predictor to every member.
  GroupPrediction predict_group(std::span<const std::vector<double>> group) const;
  GroupPrediction predict_group(const Dataset& group) const;

 private:
  std::vector<double> gather(std::span<const double> features, const std::vector<std::size_t>& cols) const;
  void check_width(std::span<const double> features) const;

  FeatureSchema schema_;
  LassoModel lasso_;
  RandomForest rf_overall_;
  RandomForest rf_nucleophile_;
  GmmModel gmm_imine_;
  GmmModel gmm_nucleophile_;
  CompositeTraining training_;
  std::vector<std::size_t> nucleophile_rf_columns_;
  std::vector<std::size_t> imine_gate_columns_;
  std::vector<std::size_t> nucleophile_gate_columns_;
};

// Resolves gating feature names to schema columns, checking their roles.
std::vector<std::size_t> gating_columns(const FeatureSchema& schema, std::span<const std::string> names,
                                        FeatureRole role);

CompositeModel train_composite(const Dataset& ds, const CompositeConfig& cfg);

// Versioned JSON document. Predictions of a loaded model are bit-identical
// to those of the saved one.
inline constexpr int kModelFormatVersion = 1;
void save_model(const CompositeModel& model, const std::filesystem::path& path);
CompositeModel load_model(const std::filesystem::path& path);
std::string serialize_model(const CompositeModel& model);
CompositeModel deserialize_model(std::string_view text);

}  // namespace stereogate
