#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stereogate/composite.hpp"
#include "stereogate/error.hpp"

namespace stereogate {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "stereogate-composite";

json optional_size(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> read_optional_size(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<std::size_t>();
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd read_vector(const json& j) {
  auto values = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd read_matrix(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = n ? static_cast<Eigen::Index>(rows.front().size()) : 0;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != d) {
      throw CorruptFileError("corrupt model file: ragged matrix");
    }
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return m;
}

json tree_json(const DecisionTree& t) {
  // Node layout: [feature, threshold, left, right, value, samples, impurity, decrease]
  json nodes = json::array();
  for (const auto& nd : t.nodes()) {
    nodes.push_back(json::array({nd.feature, nd.threshold, nd.left, nd.right, nd.value, nd.samples, nd.impurity,
                                 nd.decrease}));
  }
  return nodes;
}

DecisionTree read_tree(const json& j, TreeTask task, std::size_t num_features, std::size_t num_classes) {
  std::vector<TreeNode> nodes;
  for (const auto& a : j) {
    if (!a.is_array() || a.size() != 8) throw CorruptFileError("corrupt model file: bad tree node");
    TreeNode nd;
    nd.feature = a[0].get<int>();
    nd.threshold = a[1].get<double>();
    nd.left = a[2].get<int>();
    nd.right = a[3].get<int>();
    nd.value = a[4].get<double>();
    nd.samples = a[5].get<std::size_t>();
    nd.impurity = a[6].get<double>();
    nd.decrease = a[7].get<double>();
    nodes.push_back(nd);
  }
  return DecisionTree(task, num_features, num_classes, std::move(nodes));
}

json forest_json(const RandomForest& f) {
  const auto& p = f.params();
  json trees = json::array();
  for (const auto& t : f.trees()) trees.push_back(tree_json(t));
  return {{"task", f.task() == TreeTask::regression ? "regression" : "classification"},
          {"num_features", f.num_features()},
          {"num_classes", f.num_classes()},
          {"params",
           {{"n_trees", p.n_trees},
            {"mtry", optional_size(p.mtry)},
            {"bootstrap", p.bootstrap},
            {"max_depth", optional_size(p.max_depth)},
            {"min_samples_leaf", p.min_samples_leaf},
            {"seed", p.seed}}},
          {"trees", trees}};
}

RandomForest read_forest(const json& j) {
  const TreeTask task = j.at("task").get<std::string>() == "regression" ? TreeTask::regression
                                                                         : TreeTask::classification;
  const auto nf = j.at("num_features").get<std::size_t>();
  const auto nc = j.at("num_classes").get<std::size_t>();
  ForestParams p;
  const auto& pj = j.at("params");
  p.n_trees = pj.at("n_trees").get<std::size_t>();
  p.mtry = read_optional_size(pj.at("mtry"));
  p.bootstrap = pj.at("bootstrap").get<bool>();
  p.max_depth = read_optional_size(pj.at("max_depth"));
  p.min_samples_leaf = pj.at("min_samples_leaf").get<std::size_t>();
  p.seed = pj.at("seed").get<std::uint64_t>();
  std::vector<DecisionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(read_tree(t, task, nf, nc));
  return RandomForest(task, nf, nc, std::move(trees), p);
}

json lasso_json(const LassoModel& m) {
  return {{"coefficients", m.coefficients},
          {"intercept", m.intercept},
          {"lambda", m.lambda},
          {"means", m.means},
          {"scales", m.scales},
          {"standardized_coefficients", m.standardized_coefficients},
          {"iterations", m.iterations},
          {"converged", m.converged}};
}

LassoModel read_lasso(const json& j) {
  LassoModel m;
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.lambda = j.at("lambda").get<double>();
  m.means = j.at("means").get<std::vector<double>>();
  m.scales = j.at("scales").get<std::vector<double>>();
  m.standardized_coefficients = j.at("standardized_coefficients").get<std::vector<double>>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.converged = j.at("converged").get<bool>();
  return m;
}

json gmm_json(const GmmModel& g) {
  json comps = json::array();
  for (const auto& c : g.components()) {
    comps.push_back({{"weight", c.weight}, {"mean", vector_json(c.mean)}, {"covariance", matrix_json(c.covariance)}});
  }
  const auto& d = g.diagnostics();
  return {{"features", g.feature_names()},
          {"components", comps},
          {"diagnostics",
           {{"log_likelihood", d.log_likelihood},
            {"iterations", d.iterations},
            {"converged", d.converged},
            {"degenerate", d.degenerate},
            {"best_restart", d.best_restart}}}};
}

GmmModel read_gmm(const json& j) {
  std::vector<GmmComponent> comps;
  for (const auto& c : j.at("components")) {
    comps.push_back({c.at("weight").get<double>(), read_vector(c.at("mean")), read_matrix(c.at("covariance"))});
  }
  GmmDiagnostics d;
  const auto& dj = j.at("diagnostics");
  d.log_likelihood = dj.at("log_likelihood").get<double>();
  d.iterations = dj.at("iterations").get<std::size_t>();
  d.converged = dj.at("converged").get<bool>();
  d.degenerate = dj.at("degenerate").get<bool>();
  d.best_restart = dj.at("best_restart").get<std::size_t>();
  return GmmModel(std::move(comps), j.at("features").get<std::vector<std::string>>(), std::move(d));
}

json bic_json(const std::vector<std::pair<std::size_t, double>>& table) {
  json rows = json::array();
  for (const auto& [k, b] : table) rows.push_back(json::array({k, b}));
  return rows;
}

std::vector<std::pair<std::size_t, double>> read_bic(const json& j) {
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& r : j) out.emplace_back(r.at(0).get<std::size_t>(), r.at(1).get<double>());
  return out;
}

}  // namespace

std::string serialize_model(const CompositeModel& model) {
  json schema = json::array();
  for (const auto& f : model.schema().features()) {
    schema.push_back({{"name", f.name}, {"role", std::string(to_string(f.role))}});
  }
  const auto& t = model.training();
  json doc = {{"format", kFormatName},
              {"version", kModelFormatVersion},
              {"schema", schema},
              {"lasso", lasso_json(model.lasso())},
              {"rf_overall", forest_json(model.rf_overall())},
              {"rf_nucleophile", forest_json(model.rf_nucleophile())},
              {"gmm_imine", gmm_json(model.gmm_imine())},
              {"gmm_nucleophile", gmm_json(model.gmm_nucleophile())},
              {"training",
               {{"records", t.records},
                {"lambda", t.lambda},
                {"lambda_grid", t.lambda_grid},
                {"lambda_cv_mse", t.lambda_cv_mse},
                {"imine_bic", bic_json(t.imine_bic)},
                {"nucleophile_bic", bic_json(t.nucleophile_bic)}}}};
  return doc.dump(1) + "\n";
}

CompositeModel deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptFileError(std::string("corrupt model file: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != kFormatName) {
      throw CorruptFileError("corrupt model file: not a stereogate composite model");
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer()) {
      throw CorruptFileError("corrupt model file: missing version");
    }
    const int version = doc["version"].get<int>();
    if (version != kModelFormatVersion) {
      throw VersionError("model file version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kModelFormatVersion) + ")");
    }
    std::vector<FeatureSpec> specs;
    for (const auto& f : doc.at("schema")) {
      specs.push_back({f.at("name").get<std::string>(), parse_role(f.at("role").get<std::string>())});
    }
    CompositeTraining t;
    const auto& tj = doc.at("training");
    t.records = tj.at("records").get<std::size_t>();
    t.lambda = tj.at("lambda").get<double>();
    t.lambda_grid = tj.at("lambda_grid").get<std::vector<double>>();
    t.lambda_cv_mse = tj.at("lambda_cv_mse").get<std::vector<double>>();
    t.imine_bic = read_bic(tj.at("imine_bic"));
    t.nucleophile_bic = read_bic(tj.at("nucleophile_bic"));
    return CompositeModel(FeatureSchema(std::move(specs)), read_lasso(doc.at("lasso")),
                          read_forest(doc.at("rf_overall")), read_forest(doc.at("rf_nucleophile")),
                          read_gmm(doc.at("gmm_imine")), read_gmm(doc.at("gmm_nucleophile")), std::move(t));
  } catch (const json::exception& e) {
    throw CorruptFileError(std::string("corrupt model file: ") + e.what());
  } catch (const NumericalError& e) {
    throw CorruptFileError(std::string("corrupt model file: ") + e.what());
  }
}

void save_model(const CompositeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file '" + path.string() + "'");
  out << serialize_model(model);
  if (!out) throw InputError("failed writing model file '" + path.string() + "'");
}

CompositeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace stereogate
