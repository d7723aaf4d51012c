#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stereogate/cli.hpp"
#include "stereogate/composite.hpp"
#include "stereogate/csv.hpp"
#include "support.hpp"

using namespace stereogate;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Small, fast run configuration for the shipped demo spec.
const char* kQuickConfig = R"({
  "rf_overall": {"n_trees": 15}, "rf_nucleophile": {"n_trees": 15},
  "lasso": {"grid_size": 10},
  "gmm": {"restarts": 1},
  "gating": {"k_range": [1, 2, 3, 4, 5, 6]},
  "kfold": {"repeats": 2, "rf": {"n_trees": 10}},
  "ez": {"rf": {"n_trees": 10}}
})";

// Synthesizes the demo data into dir/demo and writes dir/quick.json.
void prepare(const testing::TempDir& dir) {
  const auto r = cli_run({"synth", "--config", testing::source_path("data/gate_demo.json").string(), "--seed", "11",
                          "--out", (dir / "demo").string()});
  REQUIRE(r.code == 0);
  testing::write_text(dir / "quick.json", kQuickConfig);
}

std::vector<csv::Row> read_csv(const fs::path& p) { return csv::parse(testing::read_text(p)); }

std::string to_csv(const std::vector<csv::Row>& rows) {
  std::ostringstream s;
  for (const auto& r : rows) csv::write_row(s, r);
  return s.str();
}

double number(const std::string& field) { return csv::parse_double(field).value(); }

}  // namespace

TEST_CASE("synth output validates cleanly and is reproducible") {
  testing::TempDir dir;
  prepare(dir);
  const auto first = testing::read_text(dir / "demo" / "data.csv");
  REQUIRE(cli_run({"synth", "--config", testing::source_path("data/gate_demo.json").string(), "--seed", "11",
                   "--out", (dir / "again").string()})
              .code == 0);
  CHECK(testing::read_text(dir / "again" / "data.csv") == first);
  CHECK(testing::read_text(dir / "again" / "schema.json") == testing::read_text(dir / "demo" / "schema.json"));

  const auto v = cli_run({"validate", "--data", (dir / "demo" / "data.csv").string()});
  CHECK(v.code == 0);
  CHECK(v.out.find("200 records; imine 4, nucleophile 5, catalyst 3, solvent 3") == 0);
  CHECK(v.out.find("ok\n") != std::string::npos);

  testing::write_text(dir / "bad_spec.json", R"({"features": [], "types": [{"name": "A", "records": 0}]})");
  CHECK(cli_run({"synth", "--config", (dir / "bad_spec.json").string(), "--out", dir.path().string()}).code == 1);
}

TEST_CASE("validate reports malformed tables") {
  testing::TempDir dir;
  testing::write_text(dir / "schema.json", R"({"features": [{"name": "a", "role": "imine"}]})");
  testing::write_text(dir / "empty.csv", "");
  auto r = cli_run({"validate", "--data", (dir / "empty.csv").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no records") != std::string::npos);

  testing::write_text(dir / "header.csv", "reaction_id,reaction_type,a,ddg\n");
  r = cli_run({"validate", "--data", (dir / "header.csv").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no records") != std::string::npos);

  testing::write_text(dir / "nan.csv", "reaction_id,reaction_type,a,ddg\nr1,T,1.0,0.5\nr2,T,nan,0.1\n");
  r = cli_run({"validate", "--data", (dir / "nan.csv").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("row 2, column 'a'") != std::string::npos);

  testing::write_text(dir / "flat.csv", "reaction_id,reaction_type,a,ddg\nr1,T,1.0,0.5\nr2,T,1.0,0.1\n");
  r = cli_run({"validate", "--data", (dir / "flat.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("warning: constant column 'a'") != std::string::npos);

  CHECK(cli_run({"validate", "--data", (dir / "absent.csv").string()}).code == 1);
}

TEST_CASE("train, predict and round-trip through the model file") {
  testing::TempDir dir;
  prepare(dir);
  const auto data = (dir / "demo" / "data.csv").string();
  const auto r = cli_run({"train", "--data", data, "--config", (dir / "quick.json").string(), "--seed", "5", "--out",
                          (dir / "run").string()});
  REQUIRE(r.code == 0);
  for (const char* name : {"model.json", "bic_imine.csv", "bic_nucleophile.csv", "importance_overall.csv",
                           "importance_nucleophile.csv", "train_report.json"})
    CHECK(fs::exists(dir / "run" / name));
  CHECK(read_csv(dir / "run" / "bic_imine.csv").size() == 7);
  const auto importance = read_csv(dir / "run" / "importance_overall.csv");
  for (std::size_t i = 2; i < importance.size(); ++i)
    CHECK(number(importance[i - 1][1]) >= number(importance[i][1]));

  const auto p = cli_run({"predict", "--model", (dir / "run" / "model.json").string(), "--data", data, "--out",
                          (dir / "pred").string()});
  REQUIRE(p.code == 0);
  const auto rows = read_csv(dir / "pred" / "predictions.csv");
  REQUIRE(rows.size() == 201);
  CHECK(rows[0] == csv::Row{"reaction_id", "reaction_type", "prediction", "imine_log_density",
                            "nucleophile_log_density", "imine_high", "nucleophile_high", "choice"});

  // The CLI output equals in-memory prediction with the loaded model.
  const auto model = load_model(dir / "run" / "model.json");
  const auto ds = load_dataset(dir / "demo" / "data.csv", dir / "demo" / "schema.json");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto expected = model.predict(ds[i].features);
    CHECK(rows[i + 1][0] == ds[i].reaction_id);
    CHECK(number(rows[i + 1][2]) == expected.value);
    CHECK(rows[i + 1][7] == to_string(expected.decision.choice));
  }

  const auto g = cli_run({"predict", "--model", (dir / "run" / "model.json").string(), "--data", data,
                          "--group-by-type", "--out", (dir / "group").string()});
  REQUIRE(g.code == 0);
  const auto grouped = read_csv(dir / "group" / "predictions.csv");
  std::map<std::string, std::set<std::string>> choices;
  for (std::size_t i = 1; i < grouped.size(); ++i) choices[grouped[i][1]].insert(grouped[i][7]);
  CHECK(choices.size() == 8);
  for (const auto& [type, set] : choices) CHECK(set.size() == 1);
}

TEST_CASE("predict handles empty input and schema mismatch") {
  testing::TempDir dir;
  prepare(dir);
  REQUIRE(cli_run({"train", "--data", (dir / "demo" / "data.csv").string(), "--config",
                   (dir / "quick.json").string(), "--out", (dir / "run").string()})
              .code == 0);
  const auto model = (dir / "run" / "model.json").string();
  const auto header = testing::read_text(dir / "demo" / "data.csv");
  testing::write_text(dir / "empty.csv", header.substr(0, header.find('\n') + 1));
  const auto e = cli_run({"predict", "--model", model, "--data", (dir / "empty.csv").string(), "--out",
                          (dir / "pred").string()});
  CHECK(e.code == 0);
  CHECK(read_csv(dir / "pred" / "predictions.csv").size() == 1);

  testing::write_text(dir / "other.csv", "reaction_id,reaction_type,x\nr1,T,1\n");
  testing::write_text(dir / "other.json", R"({"features": [{"name": "x", "role": "imine"}]})");
  const auto m = cli_run({"predict", "--model", model, "--data", (dir / "other.csv").string(), "--schema",
                          (dir / "other.json").string(), "--out", (dir / "pred").string()});
  CHECK(m.code == 1);
  CHECK_FALSE(m.err.empty());

  testing::write_text(dir / "broken.json", "{\"format\": \"stereogate-composite\", \"version\": 1");
  CHECK(cli_run({"predict", "--model", (dir / "broken.json").string(), "--data", (dir / "empty.csv").string(),
                 "--out", (dir / "pred").string()})
            .code == 1);
}

TEST_CASE("fixed gate sizes appear in the training report") {
  testing::TempDir dir;
  prepare(dir);
  testing::write_text(dir / "fixed.json", R"({"rf_overall": {"n_trees": 5}, "rf_nucleophile": {"n_trees": 5},
    "lasso": {"grid_size": 5}, "gmm": {"restarts": 1},
    "gating": {"imine_components": 15, "nucleophile_components": 14}})");
  REQUIRE(cli_run({"train", "--data", (dir / "demo" / "data.csv").string(), "--config",
                   (dir / "fixed.json").string(), "--out", (dir / "run").string()})
              .code == 0);
  const auto report = nlohmann::json::parse(testing::read_text(dir / "run" / "train_report.json"));
  CHECK(report["gmm_imine"]["components"] == 15);
  CHECK(report["gmm_nucleophile"]["components"] == 14);
}

TEST_CASE("evaluation protocols write their reports") {
  testing::TempDir dir;
  prepare(dir);
  const auto data = (dir / "demo" / "data.csv").string();
  const auto cfg = (dir / "quick.json").string();
  auto r = cli_run({"evaluate", "--protocol", "kfold", "--data", data, "--config", cfg, "--learner", "lasso",
                    "--feature-set", "no-imine", "--out", (dir / "kfold").string()});
  REQUIRE(r.code == 0);
  CHECK(read_csv(dir / "kfold" / "kfold_folds.csv").size() == 5);
  const auto kf = nlohmann::json::parse(testing::read_text(dir / "kfold" / "kfold_report.json"));
  CHECK(kf.dump().find("no-imine") != std::string::npos);

  r = cli_run({"evaluate", "--protocol", "ez", "--data", data, "--config", cfg, "--out", (dir / "ez").string()});
  CHECK(r.code == 1);  // the demo data carries no E/Z labels

  // Train on the A and B types, test on the rest.
  const auto table = read_csv(dir / "demo" / "data.csv");
  std::vector<csv::Row> train{table[0]}, test{table[0]};
  for (std::size_t i = 1; i < table.size(); ++i) (table[i][1][0] == 'A' || table[i][1][0] == 'B' ? train : test).push_back(table[i]);
  testing::write_text(dir / "train.csv", to_csv(train));
  testing::write_text(dir / "test.csv", to_csv(test));
  fs::copy_file(dir / "demo" / "schema.json", dir / "schema.json");
  r = cli_run({"evaluate", "--protocol", "oos", "--data", (dir / "train.csv").string(), "--test-data",
               (dir / "test.csv").string(), "--config", cfg, "--out", (dir / "oos").string()});
  REQUIRE(r.code == 0);
  CHECK(read_csv(dir / "oos" / "oos_types.csv").size() == 5);
  CHECK(read_csv(dir / "oos" / "oos_scatter.csv").size() == test.size());

  std::vector<csv::Row> single{table[0]};
  for (std::size_t i = 1; i < table.size(); ++i)
    if (table[i][1] == "A1") single.push_back(table[i]);
  testing::write_text(dir / "single.csv", to_csv(single));
  r = cli_run({"evaluate", "--protocol", "loto", "--data", (dir / "single.csv").string(), "--config", cfg, "--out",
               (dir / "loto").string()});
  CHECK(r.code == 1);
  CHECK(cli_run({"evaluate", "--protocol", "bogus", "--data", data, "--out", (dir / "x").string()}).code == 1);
}

TEST_CASE("repeated runs are byte-identical") {
  testing::TempDir dir;
  prepare(dir);
  const auto data = (dir / "demo" / "data.csv").string();
  const std::vector<std::string> names{"model.json",        "train_report.json", "bic_nucleophile.csv",
                                       "importance_nucleophile.csv", "kfold_report.json", "kfold_folds.csv"};
  std::vector<std::string> first;
  for (int round = 0; round < 2; ++round) {
    // Same output directory both times: the reports record their own paths.
    REQUIRE(cli_run({"train", "--data", data, "--config", (dir / "quick.json").string(), "--seed", "8", "--out",
                     (dir / "run").string()})
                .code == 0);
    REQUIRE(cli_run({"evaluate", "--protocol", "kfold", "--data", data, "--config", (dir / "quick.json").string(),
                     "--seed", "8", "--out", (dir / "run").string()})
                .code == 0);
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto text = testing::read_text(dir / "run" / names[i]);
      if (round == 0) {
        first.push_back(text);
      } else {
        CHECK(text == first[i]);
      }
      fs::remove(dir / "run" / names[i]);
    }
  }
}

TEST_CASE("configuration errors and output directory defaults") {
  testing::TempDir dir;
  prepare(dir);
  const auto data = (dir / "demo" / "data.csv").string();
  testing::write_text(dir / "typo.json", R"({"rf_overall": {"ntrees": 5}})");
  const auto r = cli_run({"train", "--data", data, "--config", (dir / "typo.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown key 'ntrees'") != std::string::npos);

  // Relative data path inside the config, output directory from the config.
  testing::write_text(dir / "demo" / "run.json", R"({"data": "data.csv", "out": "from_config",
    "rf_overall": {"n_trees": 5}, "rf_nucleophile": {"n_trees": 5}, "lasso": {"grid_size": 5},
    "gmm": {"restarts": 1}, "gating": {"k_range": [1, 2]}})");
  REQUIRE(cli_run({"train", "--config", (dir / "demo" / "run.json").string()}).code == 0);
  CHECK(fs::exists(dir / "demo" / "from_config" / "model.json"));

  ::setenv(cli::kOutputDirEnv, (dir / "from_env").string().c_str(), 1);
  const auto s = cli_run({"synth", "--config", testing::source_path("data/gate_demo.json").string()});
  ::unsetenv(cli::kOutputDirEnv);
  CHECK(s.code == 0);
  CHECK(s.out.find("seed 11") != std::string::npos);
  CHECK(fs::exists(dir / "from_env" / "data.csv"));

  CHECK(cli_run({"train"}).code == 1);
  CHECK(cli_run({"frobnicate"}).code == 1);
  CHECK(cli_run({"--help"}).code == 0);
}

TEST_CASE("the installed binary maps errors to exit codes") {
  testing::TempDir dir;
  const std::string bin = STEREOGATE_CLI_PATH;
  const auto quiet = " >" + (dir / "log").string() + " 2>&1";
  CHECK(WEXITSTATUS(std::system((bin + " --help" + quiet).c_str())) == 0);
  CHECK(WEXITSTATUS(std::system((bin + " validate" + quiet).c_str())) == 1);
  CHECK(WEXITSTATUS(std::system((bin + " validate --data " + (dir / "none.csv").string() + quiet).c_str())) == 1);
}
