#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stereogate/boost.hpp"
#include "stereogate/composite.hpp"
#include "stereogate/dataset.hpp"
#include "stereogate/forest.hpp"
#include "stereogate/metrics.hpp"
#include "stereogate/tree.hpp"

namespace stereogate {

enum class ModelKind { lasso, tree, rf, boost };
// no_imine is the nucleophile-focused view, no_nucleophile the
// imine-focused one.
enum class FeatureSet { all, no_imine, no_nucleophile };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);
std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view text);

std::vector<FeatureRole> roles_of(FeatureSet set);

struct ModelSpec {
  ModelKind kind = ModelKind::rf;
  FeatureSet features = FeatureSet::all;
  LassoSettings lasso;
  TreeParams tree;
  ForestParams rf;
  BoostParams boost;
};

using Regressor = std::function<double(std::span<const double>)>;

// Fits spec on (x, y); seed overrides the seeds inside spec.
Regressor fit_regressor(const ModelSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        std::uint64_t seed);

struct FoldResult {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  MetricReport train;
  MetricReport test;
};

struct CvSummary {
  ModelSpec spec;
  std::size_t k = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  // Population statistics over all folds of all repeats. r2 statistics
  // skip folds where r2 is undefined.
  SummaryStat train_mse, train_mae, train_r2, train_r2_pearson;
  SummaryStat test_mse, test_mae, test_r2, test_r2_pearson;
};

// Folds come from kfold_plan(n, k, repeats, seed). The model of fold i (in
// plan order) is fitted with derive_seed(derive_seed(seed, kModelStream), i).
CvSummary run_repeated_kfold(const Dataset& ds, const ModelSpec& spec, std::size_t k, std::size_t repeats,
                             std::uint64_t seed, std::size_t threads = 0);

inline constexpr std::uint64_t kModelStream = 0x6d6f64656cULL;

struct TypeComparison {
  std::string type;
  std::size_t n = 0;
  GateDecision decision;
  double composite_mae = 0.0;
  // Indexed like kAllPredictors.
  double individual_mae[3] = {0.0, 0.0, 0.0};
};

struct LotoReport {
  std::uint64_t seed = 0;
  std::vector<TypeComparison> types;
  double composite_average = 0.0;
  double individual_average[3] = {0.0, 0.0, 0.0};
  // individual_average - composite_average.
  double gap[3] = {0.0, 0.0, 0.0};
};

// Holds out each reaction type in turn, trains a composite on the rest with
// seed derive_seed(cfg.seed, fold index) and evaluates it with
// predict_group. The individual predictors are the composite's own three
// sub-models applied to the whole held-out group.
LotoReport run_leave_one_type_out(const Dataset& ds, const CompositeConfig& cfg, std::size_t threads = 0);

struct ScatterPoint {
  std::string reaction_id;
  std::string reaction_type;
  double measured = 0.0;
  double predicted = 0.0;
};

struct OosType {
  std::string type;
  std::size_t n = 0;
  GateDecision decision;
  MetricReport metrics;
};

struct OosReport {
  std::uint64_t seed = 0;
  std::vector<OosType> types;
  MetricReport pooled;
  std::vector<ScatterPoint> scatter;
};

// Trains on train, conforms test to the training schema and gates every
// test reaction type as one group.
OosReport run_out_of_sample(const Dataset& train, const Dataset& test, const CompositeConfig& cfg);
OosReport run_out_of_sample(const CompositeModel& model, const Dataset& test);

struct EzConfig {
  std::size_t k = 2;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  bool include_reaction_variable = true;
  ForestParams rf;
  std::size_t threads = 0;
};

struct EzFold {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct EzReport {
  EzConfig config;
  std::vector<std::string> features;
  std::vector<EzFold> folds;
  SummaryStat train_accuracy;
  SummaryStat test_accuracy;
};

// Random-forest E/Z classifier on catalyst, nucleophile, solvent and
// (optionally) reaction_variable columns. E is class 0, Z class 1. Fold
// models use the same seed derivation as run_repeated_kfold.
EzReport run_ez_experiment(const Dataset& ds, const EzConfig& cfg);

}  // namespace stereogate
