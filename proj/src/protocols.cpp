#include "stereogate/protocols.hpp"

#include <algorithm>
#include <cmath>

#include "stereogate/error.hpp"
#include "stereogate/lasso.hpp"
#include "stereogate/parallel.hpp"
#include "stereogate/rng.hpp"
#include "stereogate/splits.hpp"

namespace stereogate {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<double> predict_rows(const Regressor& f, const Eigen::MatrixXd& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    out[static_cast<std::size_t>(i)] = f(row);
  }
  return out;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void collect(const std::vector<FoldResult>& folds, bool test, SummaryStat& mse, SummaryStat& mae,
             SummaryStat& r2, SummaryStat& r2p) {
  std::vector<double> a, b, c, d;
  for (const auto& f : folds) {
    const MetricReport& m = test ? f.test : f.train;
    a.push_back(m.mse);
    b.push_back(m.mae);
    if (m.r2) c.push_back(*m.r2);
    if (m.r2_pearson) d.push_back(*m.r2_pearson);
  }
  mse = summarize(a);
  mae = summarize(b);
  r2 = summarize(c);
  r2p = summarize(d);
}

double mean_abs_error(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lasso: return "lasso";
    case ModelKind::tree: return "tree";
    case ModelKind::rf: return "rf";
    case ModelKind::boost: return "boost";
  }
  return "rf";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "lasso") return ModelKind::lasso;
  if (text == "tree") return ModelKind::tree;
  if (text == "rf") return ModelKind::rf;
  if (text == "boost") return ModelKind::boost;
  throw InputError("unknown model kind '" + std::string(text) + "' (expected lasso, tree, rf or boost)");
}

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::all: return "all";
    case FeatureSet::no_imine: return "no-imine";
    case FeatureSet::no_nucleophile: return "no-nucleophile";
  }
  return "all";
}

FeatureSet parse_feature_set(std::string_view text) {
  if (text == "all") return FeatureSet::all;
  if (text == "no-imine") return FeatureSet::no_imine;
  if (text == "no-nucleophile") return FeatureSet::no_nucleophile;
  throw InputError("unknown feature set '" + std::string(text) + "' (expected all, no-imine or no-nucleophile)");
}

std::vector<FeatureRole> roles_of(FeatureSet set) {
  std::vector<FeatureRole> roles;
  for (FeatureRole r : kAllRoles) {
    if (set == FeatureSet::no_imine && r == FeatureRole::imine) continue;
    if (set == FeatureSet::no_nucleophile && r == FeatureRole::nucleophile) continue;
    roles.push_back(r);
  }
  return roles;
}

Regressor fit_regressor(const ModelSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  switch (spec.kind) {
    case ModelKind::lasso: {
      double lambda = 0.0;
      if (spec.lasso.lambda) {
        lambda = *spec.lasso.lambda;
      } else {
        auto grid = lambda_grid(x, y, spec.lasso.grid_size, spec.lasso.grid_ratio);
        const std::size_t folds = std::clamp<std::size_t>(spec.lasso.cv_folds, 2, n);
        lambda = select_lambda(x, y, grid, folds, seed, spec.lasso.params).lambda;
      }
      auto m = fit_lasso(x, y, lambda, spec.lasso.params);
      return [m = std::move(m)](std::span<const double> f) { return m.predict(f); };
    }
    case ModelKind::tree: {
      std::vector<std::size_t> rows(n);
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
      auto t = fit_tree(x, as_span(y), rows, spec.tree, seed);
      return [t = std::move(t)](std::span<const double> f) { return t.predict(f); };
    }
    case ModelKind::rf: {
      ForestParams p = spec.rf;
      p.seed = seed;
      auto m = fit_rf(x, as_span(y), p);
      return [m = std::move(m)](std::span<const double> f) { return m.predict(f); };
    }
    case ModelKind::boost: {
      BoostParams p = spec.boost;
      p.seed = seed;
      auto m = fit_boost(x, as_span(y), p);
      return [m = std::move(m)](std::span<const double> f) { return m.predict(f); };
    }
  }
  throw InputError("unknown model kind");
}

CvSummary run_repeated_kfold(const Dataset& ds, const ModelSpec& spec, std::size_t k, std::size_t repeats,
                             std::uint64_t seed, std::size_t threads) {
  if (!ds.has_targets()) throw InputError("k-fold: dataset has no ddg column");
  const auto roles = roles_of(spec.features);
  const Dataset view = select_features(ds, roles);
  const Eigen::MatrixXd x = view.feature_matrix();
  const Eigen::VectorXd y = view.targets();
  const SplitPlan plan = kfold_plan(view.size(), k, repeats, seed);

  CvSummary s;
  s.spec = spec;
  s.k = k;
  s.repeats = repeats;
  s.seed = seed;
  s.folds.resize(plan.folds.size());
  const std::uint64_t model_seed = derive_seed(seed, kModelStream);
  // Folds run in parallel; each fold's forest runs single-threaded.
  ModelSpec inner = spec;
  inner.rf.threads = 1;
  parallel_for(plan.folds.size(), threads, [&](std::size_t i) {
    const Fold& fold = plan.folds[i];
    const Eigen::MatrixXd xtr = take_rows(x, fold.train);
    const Eigen::VectorXd ytr = take(y, fold.train);
    const Eigen::MatrixXd xte = take_rows(x, fold.test);
    const Eigen::VectorXd yte = take(y, fold.test);
    const Regressor f = fit_regressor(inner, xtr, ytr, derive_seed(model_seed, i));
    FoldResult r;
    r.repeat = fold.repeat;
    r.fold = i % k;
    r.train = metrics(as_span(ytr), predict_rows(f, xtr));
    r.test = metrics(as_span(yte), predict_rows(f, xte));
    s.folds[i] = r;
  });
  collect(s.folds, false, s.train_mse, s.train_mae, s.train_r2, s.train_r2_pearson);
  collect(s.folds, true, s.test_mse, s.test_mae, s.test_r2, s.test_r2_pearson);
  return s;
}

LotoReport run_leave_one_type_out(const Dataset& ds, const CompositeConfig& cfg, std::size_t threads) {
  if (!ds.has_targets()) throw InputError("leave-one-type-out: dataset has no ddg column");
  const SplitPlan plan = leave_one_type_out_plan(ds);
  LotoReport report;
  report.seed = cfg.seed;
  report.types.resize(plan.folds.size());
  parallel_for(plan.folds.size(), threads, [&](std::size_t i) {
    const Fold& fold = plan.folds[i];
    CompositeConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, i);
    fold_cfg.threads = 1;
    const CompositeModel model = train_composite(ds.subset(fold.train), fold_cfg);
    const Dataset held = ds.subset(fold.test);
    const GroupPrediction g = model.predict_group(held);
    std::vector<double> truth;
    for (const auto& r : held.records()) truth.push_back(r.ddg);

    TypeComparison t;
    t.type = fold.label;
    t.n = held.size();
    t.decision = g.decision;
    t.composite_mae = mean_abs_error(truth, g.values);
    for (std::size_t p = 0; p < 3; ++p) {
      std::vector<double> pred;
      for (const auto& r : held.records()) pred.push_back(model.predict_with(kAllPredictors[p], r.features));
      t.individual_mae[p] = mean_abs_error(truth, pred);
    }
    report.types[i] = t;
  });
  const double count = static_cast<double>(report.types.size());
  for (const auto& t : report.types) {
    report.composite_average += t.composite_mae / count;
    for (std::size_t p = 0; p < 3; ++p) report.individual_average[p] += t.individual_mae[p] / count;
  }
  for (std::size_t p = 0; p < 3; ++p) report.gap[p] = report.individual_average[p] - report.composite_average;
  return report;
}

OosReport run_out_of_sample(const CompositeModel& model, const Dataset& test) {
  if (test.empty()) throw InputError("out-of-sample: test set has no records");
  if (!test.has_targets()) throw InputError("out-of-sample: test set has no ddg column");
  const Dataset aligned = conform(test, model.schema());
  OosReport report;
  std::vector<double> all_truth;
  std::vector<double> all_pred;
  for (const auto& type : aligned.reaction_types()) {
    const auto idx = aligned.indices_of_type(type);
    const Dataset group = aligned.subset(idx);
    const GroupPrediction g = model.predict_group(group);
    std::vector<double> truth;
    for (std::size_t i = 0; i < group.size(); ++i) {
      truth.push_back(group[i].ddg);
      report.scatter.push_back({group[i].reaction_id, type, group[i].ddg, g.values[i]});
    }
    OosType t;
    t.type = type;
    t.n = group.size();
    t.decision = g.decision;
    t.metrics = metrics(truth, g.values);
    report.types.push_back(t);
    all_truth.insert(all_truth.end(), truth.begin(), truth.end());
    all_pred.insert(all_pred.end(), g.values.begin(), g.values.end());
  }
  report.pooled = metrics(all_truth, all_pred);
  return report;
}

OosReport run_out_of_sample(const Dataset& train, const Dataset& test, const CompositeConfig& cfg) {
  if (test.empty()) throw InputError("out-of-sample: test set has no records");
  conform(test, train.schema());
  const CompositeModel model = train_composite(train, cfg);
  OosReport report = run_out_of_sample(model, test);
  report.seed = cfg.seed;
  return report;
}

EzReport run_ez_experiment(const Dataset& ds, const EzConfig& cfg) {
  std::vector<FeatureRole> roles{FeatureRole::nucleophile, FeatureRole::catalyst, FeatureRole::solvent};
  if (cfg.include_reaction_variable) roles.push_back(FeatureRole::reaction_variable);
  const Dataset view = select_features(ds, roles);
  std::vector<double> labels;
  labels.reserve(view.size());
  for (std::size_t i = 0; i < view.size(); ++i) {
    const auto& ts = view[i].transition_state;
    if (!ts) throw InputError("E/Z experiment: record '" + view[i].reaction_id + "' has no transition_state label");
    labels.push_back(*ts == TransitionState::E ? 0.0 : 1.0);
  }
  const Eigen::MatrixXd x = view.feature_matrix();
  const SplitPlan plan = kfold_plan(view.size(), cfg.k, cfg.repeats, cfg.seed);

  EzReport report;
  report.config = cfg;
  for (const auto& f : view.schema().features()) report.features.push_back(f.name);
  report.folds.resize(plan.folds.size());
  const std::uint64_t model_seed = derive_seed(cfg.seed, kModelStream);
  parallel_for(plan.folds.size(), cfg.threads, [&](std::size_t i) {
    const Fold& fold = plan.folds[i];
    const Eigen::MatrixXd xtr = take_rows(x, fold.train);
    std::vector<double> ytr;
    for (std::size_t r : fold.train) ytr.push_back(labels[r]);
    ForestParams p = cfg.rf;
    p.seed = derive_seed(model_seed, i);
    p.threads = 1;
    const RandomForest forest = fit_rf(xtr, ytr, p, TreeTask::classification, 2);
    auto accuracy = [&](const std::vector<std::size_t>& rows) {
      std::size_t hits = 0;
      std::vector<double> row(static_cast<std::size_t>(x.cols()));
      for (std::size_t r : rows) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(static_cast<Eigen::Index>(r), j);
        if (static_cast<double>(forest.predict_class(row)) == labels[r]) ++hits;
      }
      return static_cast<double>(hits) / static_cast<double>(rows.size());
    };
    report.folds[i] = {fold.repeat, i % cfg.k, accuracy(fold.train), accuracy(fold.test)};
  });
  std::vector<double> tr, te;
  for (const auto& f : report.folds) {
    tr.push_back(f.train_accuracy);
    te.push_back(f.test_accuracy);
  }
  report.train_accuracy = summarize(tr);
  report.test_accuracy = summarize(te);
  return report;
}

}  // namespace stereogate
