#include "stereogate/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stereogate/composite.hpp"
#include "stereogate/config.hpp"
#include "stereogate/csv.hpp"
#include "stereogate/dataset.hpp"
#include "stereogate/error.hpp"
#include "stereogate/protocols.hpp"
#include "stereogate/synth.hpp"

namespace stereogate::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Options {
  std::optional<std::string> data;
  std::optional<std::string> schema;
  std::optional<std::string> test_data;
  std::optional<std::string> test_schema;
  std::optional<std::string> config;
  std::optional<std::string> model;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string protocol;
  bool group_by_type = false;
  std::optional<std::size_t> k;
  std::optional<std::size_t> repeats;
  std::optional<std::string> learner;
  std::optional<std::string> feature_set;
  bool exclude_reaction_variable = false;
};

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json metrics_json(const MetricReport& m) {
  return {{"n", m.n}, {"mse", m.mse}, {"mae", m.mae}, {"r2", optional_json(m.r2)},
          {"r2_pearson", optional_json(m.r2_pearson)}};
}

ordered_json stat_json(const SummaryStat& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

ordered_json decision_json(const GateDecision& d) {
  return {{"imine_log_density", d.imine_log_density},
          {"nucleophile_log_density", d.nucleophile_log_density},
          {"imine_high", d.imine_high},
          {"nucleophile_high", d.nucleophile_high},
          {"choice", std::string(to_string(d.choice))}};
}

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw InputError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const ordered_json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_table(const fs::path& path, const csv::Row& header, const std::vector<csv::Row>& rows) {
  std::ostringstream s;
  csv::write_row(s, header);
  for (const auto& r : rows) csv::write_row(s, r);
  write_text(path, s.str());
}

class Runner {
 public:
  // For synth, --config names a generator spec rather than a run config.
  Runner(const Options& opt, std::ostream& out, bool run_config) : opt_(opt), out_(out) {
    if (opt.config && run_config) cfg_ = load_run_config(*opt.config);
    if (opt.data) cfg_.data = *opt.data;
    if (opt.schema) cfg_.schema = *opt.schema;
    if (opt.test_data) cfg_.test_data = *opt.test_data;
    if (opt.test_schema) cfg_.test_schema = *opt.test_schema;
    if (opt.out) cfg_.out = *opt.out;
    if (opt.seed) cfg_.seed = *opt.seed;
    if (opt.threads) cfg_.threads = *opt.threads;
    if (opt.k) {
      cfg_.kfold_k = *opt.k;
      cfg_.ez.k = *opt.k;
    }
    if (opt.repeats) {
      cfg_.kfold_repeats = *opt.repeats;
      cfg_.ez.repeats = *opt.repeats;
    }
    if (opt.learner) cfg_.kfold_model.kind = parse_model_kind(*opt.learner);
    if (opt.feature_set) cfg_.kfold_model.features = parse_feature_set(*opt.feature_set);
    if (opt.exclude_reaction_variable) cfg_.ez.include_reaction_variable = false;
    cfg_.composite.seed = cfg_.seed;
    cfg_.composite.threads = cfg_.threads;
    cfg_.ez.seed = cfg_.seed;
    cfg_.ez.threads = cfg_.threads;
  }

  int validate() {
    const Dataset ds = load_training(LoadOptions{.require_target = false});
    if (ds.empty()) throw InputError("no records: the table has a header but no data rows");
    const auto& s = ds.schema();
    out_ << ds.size() << " records; imine " << s.count(FeatureRole::imine) << ", nucleophile "
         << s.count(FeatureRole::nucleophile) << ", catalyst " << s.count(FeatureRole::catalyst) << ", solvent "
         << s.count(FeatureRole::solvent) << ", reaction_variable " << s.count(FeatureRole::reaction_variable)
         << "\n";
    const Eigen::MatrixXd x = ds.feature_matrix();
    std::size_t warnings = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if ((x.col(j).array() == x(0, j)).all()) {
        out_ << "warning: constant column '" << s[static_cast<std::size_t>(j)].name << "'\n";
        ++warnings;
      }
    }
    if (!ds.has_targets()) {
      out_ << "warning: no ddg column\n";
      ++warnings;
    }
    if (warnings == 0) out_ << "ok\n";
    return 0;
  }

  int train() {
    const Dataset ds = load_training();
    const fs::path dir = output_dir();
    const CompositeModel model = train_composite(ds, cfg_.composite);
    save_model(model, dir / "model.json");

    const auto& t = model.training();
    auto bic_rows = [](const std::vector<std::pair<std::size_t, double>>& table) {
      std::vector<csv::Row> rows;
      for (const auto& [k, b] : table) rows.push_back({std::to_string(k), fmt(b)});
      return rows;
    };
    write_table(dir / "bic_imine.csv", {"k", "bic"}, bic_rows(t.imine_bic));
    write_table(dir / "bic_nucleophile.csv", {"k", "bic"}, bic_rows(t.nucleophile_bic));

    std::vector<std::string> overall_names;
    for (const auto& f : model.schema().features()) overall_names.push_back(f.name);
    std::vector<std::string> nucleophile_names;
    for (std::size_t c : model.nucleophile_rf_columns()) nucleophile_names.push_back(model.schema()[c].name);
    const auto overall_imp = importance_table(overall_names, model.rf_overall().importances());
    const auto nucleophile_imp = importance_table(nucleophile_names, model.rf_nucleophile().importances());
    write_table(dir / "importance_overall.csv", {"feature", "importance"}, overall_imp);
    write_table(dir / "importance_nucleophile.csv", {"feature", "importance"}, nucleophile_imp);

    ordered_json coefficients = ordered_json::object();
    for (std::size_t j = 0; j < overall_names.size(); ++j) {
      coefficients[overall_names[j]] = model.lasso().coefficients[j];
    }
    ordered_json report = {
        {"command", "train"},
        {"records", ds.size()},
        {"features", ds.schema().size()},
        {"seed", cfg_.seed},
        {"lasso",
         {{"lambda", model.lasso().lambda},
          {"intercept", model.lasso().intercept},
          {"nonzero", model.lasso().nonzero_count()},
          {"converged", model.lasso().converged},
          {"coefficients", coefficients}}},
        {"rf_overall", {{"n_trees", model.rf_overall().trees().size()}, {"top_feature", top(overall_imp)}}},
        {"rf_nucleophile",
         {{"n_trees", model.rf_nucleophile().trees().size()}, {"top_feature", top(nucleophile_imp)}}},
        {"gmm_imine", gmm_json(model.gmm_imine())},
        {"gmm_nucleophile", gmm_json(model.gmm_nucleophile())},
        {"config", to_json(cfg_)}};
    write_json(dir / "train_report.json", report);
    out_ << "trained on " << ds.size() << " records; imine gate " << model.gmm_imine().size()
         << " components, nucleophile gate " << model.gmm_nucleophile().size() << " components\n";
    out_ << "wrote " << (dir / "model.json").string() << "\n";
    return 0;
  }

  int predict() {
    if (!opt_.model) throw InputError("predict: --model is required");
    if (!cfg_.data) throw InputError("predict: --data is required");
    const CompositeModel model = load_model(*opt_.model);
    const FeatureSchema roles = cfg_.schema ? load_schema(*cfg_.schema) : model.schema();
    const Dataset input = load_dataset(*cfg_.data, roles, LoadOptions{.require_target = false});
    const fs::path dir = output_dir();

    std::vector<csv::Row> rows;
    if (!input.empty()) {
      const Dataset ds = conform(input, model.schema());
      std::vector<std::optional<CompositePrediction>> results(ds.size());
      if (opt_.group_by_type) {
        for (const auto& type : ds.reaction_types()) {
          const auto idx = ds.indices_of_type(type);
          const GroupPrediction g = model.predict_group(ds.subset(idx));
          for (std::size_t i = 0; i < idx.size(); ++i) results[idx[i]] = CompositePrediction{g.values[i], g.decision};
        }
      } else {
        for (std::size_t i = 0; i < ds.size(); ++i) results[i] = model.predict(ds[i].features);
      }
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& p = *results[i];
        rows.push_back({ds[i].reaction_id, ds[i].reaction_type, fmt(p.value), fmt(p.decision.imine_log_density),
                        fmt(p.decision.nucleophile_log_density), p.decision.imine_high ? "1" : "0",
                        p.decision.nucleophile_high ? "1" : "0", std::string(to_string(p.decision.choice))});
      }
    }
    write_table(dir / "predictions.csv",
                {"reaction_id", "reaction_type", "prediction", "imine_log_density", "nucleophile_log_density",
                 "imine_high", "nucleophile_high", "choice"},
                rows);
    out_ << "predicted " << rows.size() << " records\n";
    out_ << "wrote " << (dir / "predictions.csv").string() << "\n";
    return 0;
  }

  int evaluate() {
    if (opt_.protocol == "kfold") return kfold();
    if (opt_.protocol == "loto") return loto();
    if (opt_.protocol == "oos") return oos();
    if (opt_.protocol == "ez") return ez();
    throw InputError("unknown protocol '" + opt_.protocol + "' (expected kfold, loto, oos or ez)");
  }

  int synth() {
    if (!opt_.config) throw InputError("synth: --config (generator spec) is required");
    const SynthSpec spec = load_synth_spec(*opt_.config);
    const std::uint64_t seed = opt_.seed ? *opt_.seed : (spec.seeds.empty() ? 0 : spec.seeds.front());
    const Dataset ds = synth_generate(spec, seed);
    const fs::path dir = opt_.out ? fs::path(*opt_.out) : default_output_dir();
    fs::create_directories(dir);
    write_dataset(ds, dir / "data.csv", dir / "schema.json");
    out_ << "generated " << ds.size() << " records with seed " << seed << "\n";
    out_ << "wrote " << (dir / "data.csv").string() << " and " << (dir / "schema.json").string() << "\n";
    return 0;
  }

 private:
  static fs::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "stereogate_out";
  }

  fs::path output_dir() const {
    fs::path dir = cfg_.out ? *cfg_.out : default_output_dir();
    fs::create_directories(dir);
    return dir;
  }

  static fs::path schema_for(const std::optional<fs::path>& schema, const fs::path& data) {
    return schema ? *schema : data.parent_path() / "schema.json";
  }

  Dataset load_training(LoadOptions options = {}) const {
    if (!cfg_.data) throw InputError("--data is required");
    return load_dataset(*cfg_.data, schema_for(cfg_.schema, *cfg_.data), options);
  }

  static std::vector<csv::Row> importance_table(const std::vector<std::string>& names,
                                                const std::vector<double>& importance) {
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
    std::vector<csv::Row> rows;
    for (std::size_t j : order) rows.push_back({names[j], fmt(importance[j])});
    return rows;
  }

  static ordered_json top(const std::vector<csv::Row>& table) {
    return table.empty() ? ordered_json(nullptr) : ordered_json(table.front()[0]);
  }

  static ordered_json gmm_json(const GmmModel& g) {
    const auto& d = g.diagnostics();
    return {{"features", g.feature_names()},
            {"components", g.size()},
            {"log_likelihood", d.log_likelihood},
            {"iterations", d.iterations},
            {"converged", d.converged},
            {"degenerate", d.degenerate}};
  }

  int kfold() {
    const Dataset ds = load_training();
    const fs::path dir = output_dir();
    const CvSummary s =
        run_repeated_kfold(ds, cfg_.kfold_model, cfg_.kfold_k, cfg_.kfold_repeats, cfg_.seed, cfg_.threads);
    std::vector<csv::Row> rows;
    for (const auto& f : s.folds) {
      rows.push_back({std::to_string(f.repeat), std::to_string(f.fold), std::to_string(f.train.n),
                      std::to_string(f.test.n), fmt(f.train.mse), fmt(f.train.mae), fmt(f.train.r2),
                      fmt(f.train.r2_pearson), fmt(f.test.mse), fmt(f.test.mae), fmt(f.test.r2),
                      fmt(f.test.r2_pearson)});
    }
    write_table(dir / "kfold_folds.csv",
                {"repeat", "fold", "n_train", "n_test", "train_mse", "train_mae", "train_r2", "train_r2_pearson",
                 "test_mse", "test_mae", "test_r2", "test_r2_pearson"},
                rows);
    ordered_json report = {
        {"protocol", "kfold"},
        {"model", std::string(to_string(s.spec.kind))},
        {"features", std::string(to_string(s.spec.features))},
        {"k", s.k},
        {"repeats", s.repeats},
        {"seed", s.seed},
        {"std", "population standard deviation over all folds of all repeats"},
        {"train",
         {{"mse", stat_json(s.train_mse)},
          {"mae", stat_json(s.train_mae)},
          {"r2", stat_json(s.train_r2)},
          {"r2_pearson", stat_json(s.train_r2_pearson)}}},
        {"test",
         {{"mse", stat_json(s.test_mse)},
          {"mae", stat_json(s.test_mae)},
          {"r2", stat_json(s.test_r2)},
          {"r2_pearson", stat_json(s.test_r2_pearson)}}},
        {"config", to_json(cfg_)}};
    write_json(dir / "kfold_report.json", report);
    out_ << to_string(s.spec.kind) << " (" << to_string(s.spec.features) << "), " << s.k << "-fold x " << s.repeats
         << ": test MSE " << fmt(s.test_mse.mean) << " (" << fmt(s.test_mse.std) << "), test r2 "
         << fmt(s.test_r2.mean) << " (" << fmt(s.test_r2.std) << ")\n";
    return 0;
  }

  int loto() {
    const Dataset ds = load_training();
    const fs::path dir = output_dir();
    const LotoReport r = run_leave_one_type_out(ds, cfg_.composite, cfg_.threads);
    std::vector<csv::Row> rows;
    ordered_json types = ordered_json::array();
    for (const auto& t : r.types) {
      rows.push_back({t.type, std::to_string(t.n), fmt(t.decision.imine_log_density),
                      fmt(t.decision.nucleophile_log_density), std::string(to_string(t.decision.choice)),
                      fmt(t.composite_mae), fmt(t.individual_mae[0]), fmt(t.individual_mae[1]),
                      fmt(t.individual_mae[2])});
      types.push_back({{"type", t.type},
                       {"n", t.n},
                       {"decision", decision_json(t.decision)},
                       {"composite_mae", t.composite_mae},
                       {"lasso_mae", t.individual_mae[0]},
                       {"nucleophile_rf_mae", t.individual_mae[1]},
                       {"overall_rf_mae", t.individual_mae[2]}});
    }
    write_table(dir / "loto_types.csv",
                {"reaction_type", "n", "imine_log_density", "nucleophile_log_density", "choice", "composite_mae",
                 "lasso_mae", "nucleophile_rf_mae", "overall_rf_mae"},
                rows);
    ordered_json report = {{"protocol", "loto"},
                           {"seed", r.seed},
                           {"types", types},
                           {"average_mae",
                            {{"composite", r.composite_average},
                             {"lasso", r.individual_average[0]},
                             {"nucleophile_rf", r.individual_average[1]},
                             {"overall_rf", r.individual_average[2]}}},
                           {"gap_vs_composite",
                            {{"lasso", r.gap[0]}, {"nucleophile_rf", r.gap[1]}, {"overall_rf", r.gap[2]}}},
                           {"config", to_json(cfg_)}};
    write_json(dir / "loto_report.json", report);
    out_ << "average per-type MAE: composite " << fmt(r.composite_average) << ", LASSO "
         << fmt(r.individual_average[0]) << ", NUCLEOPHILE_RF " << fmt(r.individual_average[1]) << ", OVERALL_RF "
         << fmt(r.individual_average[2]) << "\n";
    return 0;
  }

  int oos() {
    const Dataset train = load_training();
    if (!cfg_.test_data) throw InputError("oos: --test-data is required");
    const fs::path test_schema = cfg_.test_schema ? *cfg_.test_schema : schema_for(cfg_.schema, *cfg_.data);
    const Dataset test = load_dataset(*cfg_.test_data, test_schema);
    const fs::path dir = output_dir();
    const OosReport r = run_out_of_sample(train, test, cfg_.composite);
    std::vector<csv::Row> rows;
    ordered_json types = ordered_json::array();
    for (const auto& t : r.types) {
      rows.push_back({t.type, std::to_string(t.n), fmt(t.decision.imine_log_density),
                      fmt(t.decision.nucleophile_log_density), std::string(to_string(t.decision.choice)),
                      fmt(t.metrics.mae)});
      types.push_back(
          {{"type", t.type}, {"n", t.n}, {"decision", decision_json(t.decision)}, {"metrics", metrics_json(t.metrics)}});
    }
    write_table(dir / "oos_types.csv",
                {"reaction_type", "n", "imine_log_density", "nucleophile_log_density", "choice", "mae"}, rows);
    std::vector<csv::Row> scatter;
    for (const auto& p : r.scatter) {
      scatter.push_back({p.reaction_id, p.reaction_type, fmt(p.measured), fmt(p.predicted)});
    }
    write_table(dir / "oos_scatter.csv", {"reaction_id", "reaction_type", "measured", "predicted"}, scatter);
    ordered_json report = {{"protocol", "oos"},
                           {"seed", r.seed},
                           {"types", types},
                           {"pooled", metrics_json(r.pooled)},
                           {"config", to_json(cfg_)}};
    write_json(dir / "oos_report.json", report);
    for (const auto& t : r.types) {
      out_ << t.type << ": " << to_string(t.decision.choice) << ", MAE " << fmt(t.metrics.mae) << "\n";
    }
    out_ << "pooled: MAE " << fmt(r.pooled.mae) << ", r2 " << fmt(r.pooled.r2) << "\n";
    return 0;
  }

  int ez() {
    const Dataset ds = load_training(LoadOptions{.require_target = false});
    const fs::path dir = output_dir();
    const EzReport r = run_ez_experiment(ds, cfg_.ez);
    std::vector<csv::Row> rows;
    for (const auto& f : r.folds) {
      rows.push_back({std::to_string(f.repeat), std::to_string(f.fold), fmt(f.train_accuracy), fmt(f.test_accuracy)});
    }
    write_table(dir / "ez_folds.csv", {"repeat", "fold", "train_accuracy", "test_accuracy"}, rows);
    ordered_json report = {{"protocol", "ez"},
                           {"k", r.config.k},
                           {"repeats", r.config.repeats},
                           {"seed", r.config.seed},
                           {"include_reaction_variable", r.config.include_reaction_variable},
                           {"features", r.features},
                           {"train_accuracy", stat_json(r.train_accuracy)},
                           {"test_accuracy", stat_json(r.test_accuracy)},
                           {"config", to_json(cfg_)}};
    write_json(dir / "ez_report.json", report);
    out_ << "E/Z accuracy: train " << fmt(r.train_accuracy.mean) << ", test " << fmt(r.test_accuracy.mean) << "\n";
    return 0;
  }

  const Options& opt_;
  std::ostream& out_;
  RunConfig cfg_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Composite stereoselectivity models for imine additions", "stereogate"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", opt.data, "Reaction table (CSV)");
    sub->add_option("--schema", opt.schema, "Feature role sidecar (JSON); defaults to schema.json next to --data");
    sub->add_option("--config", opt.config, "Run configuration (JSON)");
    sub->add_option("--out", opt.out, std::string("Output directory; defaults to $") + kOutputDirEnv);
    sub->add_option("--seed", opt.seed, "Root random seed");
    sub->add_option("--threads", opt.threads, "Worker threads (0 = hardware concurrency)");
  };

  auto* validate = app.add_subcommand("validate", "Check a reaction table against its schema");
  validate->add_option("--data", opt.data, "Reaction table (CSV)")->required();
  validate->add_option("--schema", opt.schema, "Feature role sidecar (JSON)");

  auto* train = app.add_subcommand("train", "Train the composite model");
  add_common(train);

  auto* predict = app.add_subcommand("predict", "Predict with a trained composite model");
  predict->add_option("--model", opt.model, "Model file written by train")->required();
  predict->add_option("--data", opt.data, "Input table (CSV); ddg is optional")->required();
  predict->add_option("--schema", opt.schema, "Feature role sidecar; defaults to the model's schema");
  predict->add_option("--out", opt.out, std::string("Output directory; defaults to $") + kOutputDirEnv);
  predict->add_flag("--group-by-type", opt.group_by_type, "Gate each reaction type once on its mean log densities");

  auto* evaluate = app.add_subcommand("evaluate", "Run an evaluation protocol");
  add_common(evaluate);
  evaluate->add_option("--protocol", opt.protocol, "kfold, loto, oos or ez")->required();
  evaluate->add_option("--k", opt.k, "Folds per repeat (kfold, ez)");
  evaluate->add_option("--repeats", opt.repeats, "Repeats (kfold, ez)");
  evaluate->add_option("--learner", opt.learner, "kfold model: lasso, tree, rf or boost");
  evaluate->add_option("--feature-set", opt.feature_set, "kfold features: all, no-imine or no-nucleophile");
  evaluate->add_option("--test-data", opt.test_data, "Test table for oos");
  evaluate->add_option("--test-schema", opt.test_schema, "Test table schema for oos");
  evaluate->add_flag("--exclude-reaction-variable", opt.exclude_reaction_variable,
                     "ez: drop reaction_variable columns");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a generator spec");
  synth->add_option("--config", opt.config, "Generator spec (JSON)")->required();
  synth->add_option("--seed", opt.seed, "Generator seed; defaults to the spec's first seed");
  synth->add_option("--out", opt.out, "Output directory for data.csv and schema.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    Runner runner(opt, out, !*synth);
    if (*validate) return runner.validate();
    if (*train) return runner.train();
    if (*predict) return runner.predict();
    if (*evaluate) return runner.evaluate();
    if (*synth) return runner.synth();
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"stereogate"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace stereogate::cli
