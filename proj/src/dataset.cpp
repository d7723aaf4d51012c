#include "stereogate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "stereogate/csv.hpp"
#include "stereogate/error.hpp"

namespace stereogate {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

std::string_view to_string(FeatureRole role) {
  switch (role) {
    case FeatureRole::imine: return "imine";
    case FeatureRole::nucleophile: return "nucleophile";
    case FeatureRole::catalyst: return "catalyst";
    case FeatureRole::solvent: return "solvent";
    case FeatureRole::reaction_variable: return "reaction_variable";
  }
  return "unknown";
}

FeatureRole parse_role(std::string_view text) {
  for (FeatureRole role : kAllRoles) {
    if (to_string(role) == text) return role;
  }
  throw InputError("unknown feature role '" + std::string(text) + "'");
}

std::string_view to_string(TransitionState ts) { return ts == TransitionState::E ? "E" : "Z"; }

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& name = features_[i].name;
    if (name.empty()) throw InputError("feature name must not be empty");
    if (is_reserved_column(name)) throw InputError("feature name '" + name + "' is reserved");
    if (!index_.emplace(name, i).second) throw InputError("duplicate feature name '" + name + "'");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t FeatureSchema::count(FeatureRole role) const {
  return static_cast<std::size_t>(std::count_if(
      features_.begin(), features_.end(), [role](const FeatureSpec& f) { return f.role == role; }));
}

Dataset::Dataset(FeatureSchema schema, std::vector<ReactionRecord> records, bool has_targets)
    : schema_(std::move(schema)), records_(std::move(records)), has_targets_(has_targets) {
  for (const auto& r : records_) {
    if (r.features.size() != schema_.size()) {
      throw InputError("record '" + r.reaction_id + "' has " + std::to_string(r.features.size()) +
                       " features, schema has " + std::to_string(schema_.size()));
    }
    for (std::size_t j = 0; j < r.features.size(); ++j) {
      if (!std::isfinite(r.features[j])) {
        throw InputError("record '" + r.reaction_id + "', column '" + schema_[j].name +
                         "': non-finite value");
      }
    }
    if (has_targets_ && !std::isfinite(r.ddg)) {
      throw InputError("record '" + r.reaction_id + "': non-finite ddg");
    }
  }
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records_.size()),
                    static_cast<Eigen::Index>(schema_.size()));
  for (std::size_t i = 0; i < records_.size(); ++i) {
    for (std::size_t j = 0; j < schema_.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = records_[i].features[j];
    }
  }
  return x;
}

Eigen::VectorXd Dataset::targets() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(records_.size()));
  for (std::size_t i = 0; i < records_.size(); ++i) y(static_cast<Eigen::Index>(i)) = records_[i].ddg;
  return y;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<ReactionRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= records_.size()) throw InputError("subset index out of range");
    out.push_back(records_[i]);
  }
  Dataset ds;
  ds.schema_ = schema_;
  ds.records_ = std::move(out);
  ds.has_targets_ = has_targets_;
  return ds;
}

std::vector<std::string> Dataset::reaction_types() const {
  std::vector<std::string> types;
  std::unordered_set<std::string> seen;
  for (const auto& r : records_) {
    if (seen.insert(r.reaction_type).second) types.push_back(r.reaction_type);
  }
  return types;
}

std::vector<std::size_t> Dataset::indices_of_type(std::string_view type) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].reaction_type == type) out.push_back(i);
  }
  return out;
}

bool is_reserved_column(std::string_view name) {
  return name == kReactionIdColumn || name == kReactionTypeColumn || name == kTargetColumn ||
         name == kTransitionStateColumn;
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("schema '" + path.string() + "': " + e.what());
  }
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw InputError("schema '" + path.string() + "': expected an object with a 'features' array");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "features") throw InputError("schema '" + path.string() + "': unknown key '" + key + "'");
  }
  std::vector<FeatureSpec> specs;
  for (const auto& entry : doc["features"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("role") ||
        !entry["name"].is_string() || !entry["role"].is_string() || entry.size() != 2) {
      throw InputError("schema '" + path.string() +
                       "': each feature needs exactly string fields 'name' and 'role'");
    }
    specs.push_back({entry["name"].get<std::string>(), parse_role(entry["role"].get<std::string>())});
  }
  return FeatureSchema(std::move(specs));
}

void write_schema(const FeatureSchema& schema, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["features"] = nlohmann::ordered_json::array();
  for (const auto& f : schema.features()) {
    doc["features"].push_back({{"name", f.name}, {"role", std::string(to_string(f.role))}});
  }
  write_file(path, doc.dump(2) + "\n");
}

Dataset parse_dataset(std::string_view table_text, const FeatureSchema& roles, LoadOptions options) {
  auto rows = csv::parse(table_text);
  if (rows.empty()) throw InputError("no records: table is empty (no header row)");
  const auto& header = rows.front();

  std::unordered_set<std::string> seen;
  for (const auto& name : header) {
    if (!seen.insert(name).second) throw InputError("duplicate column '" + name + "'");
  }

  auto locate = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto id_col = locate(kReactionIdColumn);
  auto type_col = locate(kReactionTypeColumn);
  auto ddg_col = locate(kTargetColumn);
  auto ts_col = locate(kTransitionStateColumn);
  if (!id_col) throw InputError("missing reserved column 'reaction_id'");
  if (!type_col) throw InputError("missing reserved column 'reaction_type'");
  if (!ddg_col && options.require_target) throw InputError("missing reserved column 'ddg'");

  std::vector<FeatureSpec> specs;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (is_reserved_column(header[c])) continue;
    auto idx = roles.index_of(header[c]);
    if (!idx) throw InputError("unmapped column '" + header[c] + "': not listed in the schema");
    specs.push_back(roles[*idx]);
    feature_cols.push_back(c);
  }
  for (const auto& f : roles.features()) {
    if (!locate(f.name)) throw InputError("schema column '" + f.name + "' is missing from the table");
  }

  std::vector<ReactionRecord> records;
  records.reserve(rows.size() - 1);
  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "row " + std::to_string(r);
    if (row.size() != header.size()) {
      throw InputError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(row.size()));
    }
    ReactionRecord rec;
    rec.reaction_id = row[*id_col];
    rec.reaction_type = row[*type_col];
    if (rec.reaction_id.empty()) throw InputError(where + ": empty reaction_id");
    if (!ids.insert(rec.reaction_id).second) {
      throw InputError(where + ": duplicate reaction_id '" + rec.reaction_id + "'");
    }
    auto number = [&](std::size_t c) {
      auto v = csv::parse_double(row[c]);
      if (!v) {
        throw InputError(where + ", column '" + header[c] + "': non-numeric value '" + row[c] + "'");
      }
      if (!std::isfinite(*v)) {
        throw InputError(where + ", column '" + header[c] + "': non-finite value '" + row[c] + "'");
      }
      return *v;
    };
    rec.features.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) rec.features.push_back(number(c));
    if (ddg_col) {
      rec.ddg = number(*ddg_col);
    } else {
      rec.ddg = std::nan("");
    }
    if (ts_col) {
      const auto& ts = row[*ts_col];
      if (ts == "E") {
        rec.transition_state = TransitionState::E;
      } else if (ts == "Z") {
        rec.transition_state = TransitionState::Z;
      } else if (!ts.empty()) {
        throw InputError(where + ", column 'transition_state': expected E, Z or empty, found '" + ts + "'");
      }
    }
    records.push_back(std::move(rec));
  }
  return Dataset(FeatureSchema(std::move(specs)), std::move(records), ddg_col.has_value());
}

Dataset load_dataset(const std::filesystem::path& table_path, const FeatureSchema& roles,
                     LoadOptions options) {
  return parse_dataset(read_file(table_path), roles, options);
}

Dataset load_dataset(const std::filesystem::path& table_path,
                     const std::filesystem::path& schema_path, LoadOptions options) {
  return load_dataset(table_path, load_schema(schema_path), options);
}

std::string format_table(const Dataset& ds) {
  std::ostringstream out;
  bool with_ts = std::any_of(ds.records().begin(), ds.records().end(),
                             [](const ReactionRecord& r) { return r.transition_state.has_value(); });
  csv::Row header{std::string(kReactionIdColumn), std::string(kReactionTypeColumn)};
  if (ds.has_targets()) header.emplace_back(kTargetColumn);
  if (with_ts) header.emplace_back(kTransitionStateColumn);
  for (const auto& f : ds.schema().features()) header.push_back(f.name);
  csv::write_row(out, header);
  for (const auto& r : ds.records()) {
    csv::Row row{r.reaction_id, r.reaction_type};
    if (ds.has_targets()) row.push_back(csv::format_double(r.ddg));
    if (with_ts) row.emplace_back(r.transition_state ? to_string(*r.transition_state) : "");
    for (double v : r.features) row.push_back(csv::format_double(v));
    csv::write_row(out, row);
  }
  return out.str();
}

void write_dataset(const Dataset& ds, const std::filesystem::path& table_path,
                   const std::filesystem::path& schema_path) {
  write_file(table_path, format_table(ds));
  write_schema(ds.schema(), schema_path);
}

std::vector<std::size_t> columns_with_roles(const FeatureSchema& schema,
                                            std::span<const FeatureRole> roles) {
  if (roles.empty()) throw InputError("feature selection needs at least one role");
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (std::find(roles.begin(), roles.end(), schema[j].role) != roles.end()) cols.push_back(j);
  }
  if (cols.empty()) throw InputError("feature selection yields zero columns");
  return cols;
}

Dataset select_features(const Dataset& ds, std::span<const FeatureRole> roles) {
  auto cols = columns_with_roles(ds.schema(), roles);
  std::vector<FeatureSpec> specs;
  for (std::size_t j : cols) specs.push_back(ds.schema()[j]);
  std::vector<ReactionRecord> records;
  records.reserve(ds.size());
  for (const auto& r : ds.records()) {
    ReactionRecord out = r;
    out.features.clear();
    for (std::size_t j : cols) out.features.push_back(r.features[j]);
    records.push_back(std::move(out));
  }
  return Dataset(FeatureSchema(std::move(specs)), std::move(records), ds.has_targets());
}

Dataset conform(const Dataset& ds, const FeatureSchema& target) {
  if (ds.schema() == target) return ds;
  if (ds.schema().size() != target.size()) {
    throw InputError("schema mismatch: table has " + std::to_string(ds.schema().size()) +
                     " feature columns, model expects " + std::to_string(target.size()));
  }
  std::vector<std::size_t> source(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    auto idx = ds.schema().index_of(target[j].name);
    if (!idx) throw InputError("schema mismatch: missing feature '" + target[j].name + "'");
    if (ds.schema()[*idx].role != target[j].role) {
      throw InputError("schema mismatch: feature '" + target[j].name + "' has a different role");
    }
    source[j] = *idx;
  }
  std::vector<ReactionRecord> records;
  records.reserve(ds.size());
  for (const auto& r : ds.records()) {
    ReactionRecord out = r;
    for (std::size_t j = 0; j < target.size(); ++j) out.features[j] = r.features[source[j]];
    records.push_back(std::move(out));
  }
  return Dataset(target, std::move(records), ds.has_targets());
}

}  // namespace stereogate
