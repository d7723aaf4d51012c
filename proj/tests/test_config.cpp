#include <doctest.h>

#include "stereogate/config.hpp"
#include "stereogate/error.hpp"
#include "support.hpp"

using namespace stereogate;
using nlohmann::json;

TEST_CASE("an empty config keeps every default") {
  const auto cfg = parse_run_config(json::object());
  CHECK_FALSE(cfg.data);
  CHECK(cfg.seed == 0);
  CHECK(cfg.kfold_k == 2);
  CHECK(cfg.kfold_repeats == 100);
  CHECK(cfg.kfold_model.kind == ModelKind::rf);
  CHECK(cfg.composite.k_range.size() == 20);
  CHECK(cfg.composite.k_range.front() == 1);
  CHECK(cfg.composite.gmm.restarts == 5);
  CHECK(cfg.composite.lasso.grid_size == 50);
  CHECK(cfg.ez.include_reaction_variable);
}

TEST_CASE("nested sections override fields") {
  const auto doc = json::parse(R"({
    "seed": 42, "threads": 2,
    "lasso": {"lambda": 0.05, "cv_folds": 3},
    "rf_overall": {"n_trees": 7, "mtry": 2, "max_depth": null},
    "gmm": {"restarts": 1, "reg": 1e-4},
    "gating": {"k_range": [2, 3], "imine_components": 4, "nucleophile_features": ["a", "b"]},
    "kfold": {"model": "boost", "features": "no-imine", "k": 4, "repeats": 3, "boost": {"n_stages": 9}},
    "ez": {"include_reaction_variable": false, "rf": {"n_trees": 11}}
  })");
  const auto cfg = parse_run_config(doc);
  CHECK(cfg.seed == 42);
  CHECK(cfg.threads == 2);
  CHECK(*cfg.composite.lasso.lambda == 0.05);
  CHECK(cfg.composite.lasso.cv_folds == 3);
  CHECK(cfg.composite.rf_overall.n_trees == 7);
  CHECK(*cfg.composite.rf_overall.mtry == 2);
  CHECK_FALSE(cfg.composite.rf_overall.max_depth);
  CHECK(cfg.composite.rf_nucleophile.n_trees == 100);
  CHECK(cfg.composite.gmm.reg == 1e-4);
  CHECK(cfg.composite.k_range == std::vector<std::size_t>{2, 3});
  CHECK(*cfg.composite.imine_components == 4);
  CHECK(cfg.composite.nucleophile_features == std::vector<std::string>{"a", "b"});
  CHECK(cfg.kfold_model.kind == ModelKind::boost);
  CHECK(cfg.kfold_model.features == FeatureSet::no_imine);
  CHECK(cfg.kfold_k == 4);
  CHECK(cfg.kfold_model.boost.n_stages == 9);
  CHECK_FALSE(cfg.ez.include_reaction_variable);
  CHECK(cfg.ez.rf.n_trees == 11);
}

TEST_CASE("unknown keys and wrong types are rejected") {
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"sed": 1})")), doctest::Contains("unknown key 'sed'"),
                       InputError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"gmm": {"restart": 1}})")),
                       doctest::Contains("unknown key 'restart'"), InputError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"kfold": {"rf": {"trees": 1}}})")), InputError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"seed": -1})")), InputError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"seed": "7"})")), InputError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"lasso": {"tol": "small"}})")), InputError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"kfold": {"model": "svm"}})")), InputError);
  CHECK_THROWS_AS(parse_run_config(json::parse("[1, 2]")), InputError);
}

TEST_CASE("relative paths resolve against the config file") {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "cfg");
  testing::write_text(dir / "cfg" / "run.json", R"({"data": "../data.csv", "out": "/abs/out", "seed": 3})");
  const auto cfg = load_run_config(dir / "cfg" / "run.json");
  REQUIRE(cfg.data);
  CHECK(std::filesystem::weakly_canonical(*cfg.data) == std::filesystem::weakly_canonical(dir / "data.csv"));
  CHECK(*cfg.out == std::filesystem::path("/abs/out"));
  CHECK(cfg.seed == 3);
  testing::write_text(dir / "bad.json", "{\"seed\": ");
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), InputError);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), InputError);
}

TEST_CASE("the effective config parses back to itself") {
  const auto doc = json::parse(R"({
    "seed": 9, "lasso": {"lambda": 0.5}, "rf_nucleophile": {"min_samples_leaf": 3},
    "gating": {"k_range": [1, 4]}, "kfold": {"model": "tree", "tree": {"max_depth": 4}}
  })");
  const auto cfg = parse_run_config(doc);
  const auto out = to_json(cfg);
  const auto again = parse_run_config(json::parse(out.dump()));
  CHECK(to_json(again) == out);
  CHECK(again.seed == 9);
  CHECK(*again.kfold_model.tree.max_depth == 4);
  CHECK(again.composite.rf_nucleophile.min_samples_leaf == 3);
}
