#include "stereogate/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "stereogate/error.hpp"

namespace stereogate {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class Section {
 public:
  Section(const json& j, std::string context, std::set<std::string> allowed) : j_(j), context_(std::move(context)) {
    if (!j.is_object()) throw InputError("config: " + where() + " must be an object");
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) throw InputError("config: unknown key '" + key + "' in " + where());
    }
  }

  const json* find(const std::string& key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void size(const std::string& key, std::size_t& out) const {
    if (auto* v = find(key)) out = as_size(*v, key);
  }

  void optional_size(const std::string& key, std::optional<std::size_t>& out) const {
    if (auto* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        out = as_size(*v, key);
      }
    }
  }

  void u64(const std::string& key, std::uint64_t& out) const {
    if (auto* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void real(const std::string& key, double& out) const {
    if (auto* v = find(key)) out = as_real(*v, key);
  }

  void optional_real(const std::string& key, std::optional<double>& out) const {
    if (auto* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        out = as_real(*v, key);
      }
    }
  }

  void flag(const std::string& key, bool& out) const {
    if (auto* v = find(key)) {
      if (!v->is_boolean()) fail(key, "true or false");
      out = v->get<bool>();
    }
  }

  void text(const std::string& key, std::string& out) const {
    if (auto* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) const {
    if (auto* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  void sizes(const std::string& key, std::vector<std::size_t>& out) const {
    if (auto* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of non-negative integers");
      out.clear();
      for (const auto& e : *v) out.push_back(as_size(e, key));
    }
  }

  void path(const std::string& key, std::optional<std::filesystem::path>& out,
            const std::filesystem::path& base) const {
    if (auto* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_string()) fail(key, "a path string");
      std::filesystem::path p = v->get<std::string>();
      out = p.is_relative() && !base.empty() ? base / p : p;
    }
  }

  std::string child_context(const std::string& key) const { return context_ + "." + key; }

 private:
  std::string where() const { return context_.empty() ? "top level" : "'" + context_.substr(1) + "'"; }

  [[noreturn]] void fail(const std::string& key, const char* expected) const {
    throw InputError("config: '" + (context_.empty() ? key : context_.substr(1) + "." + key) + "' must be " +
                     expected);
  }

  std::size_t as_size(const json& v, const std::string& key) const {
    if (!v.is_number_unsigned()) fail(key, "a non-negative integer");
    return v.get<std::size_t>();
  }

  double as_real(const json& v, const std::string& key) const {
    if (!v.is_number() || !std::isfinite(v.get<double>())) fail(key, "a finite number");
    return v.get<double>();
  }

  const json& j_;
  std::string context_;
};

void read_lasso(const json& j, const std::string& ctx, LassoSettings& s) {
  Section sec(j, ctx, {"lambda", "grid_size", "grid_ratio", "cv_folds", "tol", "max_iter"});
  sec.optional_real("lambda", s.lambda);
  sec.size("grid_size", s.grid_size);
  sec.real("grid_ratio", s.grid_ratio);
  sec.size("cv_folds", s.cv_folds);
  sec.real("tol", s.params.tol);
  sec.size("max_iter", s.params.max_iter);
}

void read_forest(const json& j, const std::string& ctx, ForestParams& p) {
  Section sec(j, ctx, {"n_trees", "mtry", "bootstrap", "max_depth", "min_samples_leaf"});
  sec.size("n_trees", p.n_trees);
  sec.optional_size("mtry", p.mtry);
  sec.flag("bootstrap", p.bootstrap);
  sec.optional_size("max_depth", p.max_depth);
  sec.size("min_samples_leaf", p.min_samples_leaf);
}

void read_tree(const json& j, const std::string& ctx, TreeParams& p) {
  Section sec(j, ctx, {"max_depth", "min_samples_leaf", "mtry"});
  sec.optional_size("max_depth", p.max_depth);
  sec.size("min_samples_leaf", p.min_samples_leaf);
  sec.optional_size("mtry", p.mtry);
}

void read_boost(const json& j, const std::string& ctx, BoostParams& p) {
  Section sec(j, ctx, {"n_stages", "max_depth", "min_samples_leaf"});
  sec.size("n_stages", p.n_stages);
  sec.optional_size("max_depth", p.tree.max_depth);
  sec.size("min_samples_leaf", p.tree.min_samples_leaf);
}

ordered_json opt(const std::optional<std::size_t>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json lasso_json(const LassoSettings& s) {
  return {{"lambda", s.lambda ? ordered_json(*s.lambda) : ordered_json(nullptr)},
          {"grid_size", s.grid_size},
          {"grid_ratio", s.grid_ratio},
          {"cv_folds", s.cv_folds},
          {"tol", s.params.tol},
          {"max_iter", s.params.max_iter}};
}

ordered_json forest_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"mtry", opt(p.mtry)},
          {"bootstrap", p.bootstrap},
          {"max_depth", opt(p.max_depth)},
          {"min_samples_leaf", p.min_samples_leaf}};
}

ordered_json path_json(const std::optional<std::filesystem::path>& p) {
  return p ? ordered_json(p->generic_string()) : ordered_json(nullptr);
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Section top(doc, "", {"data", "schema", "test_data", "test_schema", "out", "seed", "threads", "lasso", "rf_overall",
                        "rf_nucleophile", "gmm", "gating", "kfold", "ez"});
  top.path("data", cfg.data, base_dir);
  top.path("schema", cfg.schema, base_dir);
  top.path("test_data", cfg.test_data, base_dir);
  top.path("test_schema", cfg.test_schema, base_dir);
  top.path("out", cfg.out, base_dir);
  top.u64("seed", cfg.seed);
  top.size("threads", cfg.threads);

  auto& c = cfg.composite;
  if (auto* j = top.find("lasso")) read_lasso(*j, ".lasso", c.lasso);
  if (auto* j = top.find("rf_overall")) read_forest(*j, ".rf_overall", c.rf_overall);
  if (auto* j = top.find("rf_nucleophile")) read_forest(*j, ".rf_nucleophile", c.rf_nucleophile);
  if (auto* j = top.find("gmm")) {
    Section sec(*j, ".gmm", {"max_iter", "tol", "restarts", "reg"});
    sec.size("max_iter", c.gmm.max_iter);
    sec.real("tol", c.gmm.tol);
    sec.size("restarts", c.gmm.restarts);
    sec.real("reg", c.gmm.reg);
  }
  if (auto* j = top.find("gating")) {
    Section sec(*j, ".gating",
                {"imine_features", "nucleophile_features", "k_range", "imine_components", "nucleophile_components"});
    sec.strings("imine_features", c.imine_features);
    sec.strings("nucleophile_features", c.nucleophile_features);
    sec.sizes("k_range", c.k_range);
    sec.optional_size("imine_components", c.imine_components);
    sec.optional_size("nucleophile_components", c.nucleophile_components);
  }
  if (auto* j = top.find("kfold")) {
    Section sec(*j, ".kfold", {"model", "features", "k", "repeats", "lasso", "tree", "rf", "boost"});
    std::string text(to_string(cfg.kfold_model.kind));
    sec.text("model", text);
    cfg.kfold_model.kind = parse_model_kind(text);
    text = std::string(to_string(cfg.kfold_model.features));
    sec.text("features", text);
    cfg.kfold_model.features = parse_feature_set(text);
    sec.size("k", cfg.kfold_k);
    sec.size("repeats", cfg.kfold_repeats);
    if (auto* s = sec.find("lasso")) read_lasso(*s, ".kfold.lasso", cfg.kfold_model.lasso);
    if (auto* s = sec.find("tree")) read_tree(*s, ".kfold.tree", cfg.kfold_model.tree);
    if (auto* s = sec.find("rf")) read_forest(*s, ".kfold.rf", cfg.kfold_model.rf);
    if (auto* s = sec.find("boost")) read_boost(*s, ".kfold.boost", cfg.kfold_model.boost);
  }
  if (auto* j = top.find("ez")) {
    Section sec(*j, ".ez", {"k", "repeats", "include_reaction_variable", "rf"});
    sec.size("k", cfg.ez.k);
    sec.size("repeats", cfg.ez.repeats);
    sec.flag("include_reaction_variable", cfg.ez.include_reaction_variable);
    if (auto* s = sec.find("rf")) read_forest(*s, ".ez.rf", cfg.ez.rf);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

ordered_json to_json(const RunConfig& cfg) {
  const auto& c = cfg.composite;
  const auto& m = cfg.kfold_model;
  return {
      {"data", path_json(cfg.data)},
      {"schema", path_json(cfg.schema)},
      {"test_data", path_json(cfg.test_data)},
      {"test_schema", path_json(cfg.test_schema)},
      {"out", path_json(cfg.out)},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"lasso", lasso_json(c.lasso)},
      {"rf_overall", forest_json(c.rf_overall)},
      {"rf_nucleophile", forest_json(c.rf_nucleophile)},
      {"gmm", {{"max_iter", c.gmm.max_iter}, {"tol", c.gmm.tol}, {"restarts", c.gmm.restarts}, {"reg", c.gmm.reg}}},
      {"gating",
       {{"imine_features", c.imine_features},
        {"nucleophile_features", c.nucleophile_features},
        {"k_range", c.k_range},
        {"imine_components", opt(c.imine_components)},
        {"nucleophile_components", opt(c.nucleophile_components)}}},
      {"kfold",
       {{"model", std::string(to_string(m.kind))},
        {"features", std::string(to_string(m.features))},
        {"k", cfg.kfold_k},
        {"repeats", cfg.kfold_repeats},
        {"lasso", lasso_json(m.lasso)},
        {"tree",
         {{"max_depth", opt(m.tree.max_depth)},
          {"min_samples_leaf", m.tree.min_samples_leaf},
          {"mtry", opt(m.tree.mtry)}}},
        {"rf", forest_json(m.rf)},
        {"boost",
         {{"n_stages", m.boost.n_stages},
          {"max_depth", opt(m.boost.tree.max_depth)},
          {"min_samples_leaf", m.boost.tree.min_samples_leaf}}}}},
      {"ez",
       {{"k", cfg.ez.k},
        {"repeats", cfg.ez.repeats},
        {"include_reaction_variable", cfg.ez.include_reaction_variable},
        {"rf", forest_json(cfg.ez.rf)}}}};
}

}  // namespace stereogate
