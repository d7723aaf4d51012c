#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace stereogate {

// Molecule role a descriptor column belongs to.
enum class FeatureRole { imine, nucleophile, catalyst, solvent, reaction_variable };

inline constexpr FeatureRole kAllRoles[] = {FeatureRole::imine, FeatureRole::nucleophile,
                                            FeatureRole::catalyst, FeatureRole::solvent,
                                            FeatureRole::reaction_variable};

std::string_view to_string(FeatureRole role);
FeatureRole parse_role(std::string_view text);

enum class TransitionState { E, Z };

std::string_view to_string(TransitionState ts);

struct FeatureSpec {
  std::string name;
  FeatureRole role;

  bool operator==(const FeatureSpec&) const = default;
};

// Ordered feature columns. Names are unique.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  std::size_t size() const { return features_.size(); }
  bool empty() const { return features_.empty(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureSpec>& features() const { return features_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t count(FeatureRole role) const;

  bool operator==(const FeatureSchema& other) const { return features_ == other.features_; }

 private:
  std::vector<FeatureSpec> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One reaction. ddg is the target in kcal/mol.
struct ReactionRecord {
  std::string reaction_id;
  std::string reaction_type;
  std::vector<double> features;
  double ddg = 0.0;
  std::optional<TransitionState> transition_state;

  bool operator==(const ReactionRecord&) const = default;
};

class Dataset {
 public:
  Dataset() = default;
  // Validates every record against the schema. When has_targets is false
  // the ddg fields are ignored (prediction inputs without measured values).
  Dataset(FeatureSchema schema, std::vector<ReactionRecord> records, bool has_targets = true);

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<ReactionRecord>& records() const { return records_; }
  const ReactionRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool has_targets() const { return has_targets_; }

  // Column-major n x p matrix of feature values.
  Eigen::MatrixXd feature_matrix() const;
  Eigen::VectorXd targets() const;

  // Records at the given positions, in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

  // Distinct reaction types in order of first appearance.
  std::vector<std::string> reaction_types() const;
  std::vector<std::size_t> indices_of_type(std::string_view type) const;

 private:
  FeatureSchema schema_;
  std::vector<ReactionRecord> records_;
  bool has_targets_ = true;
};

inline constexpr std::string_view kReactionIdColumn = "reaction_id";
inline constexpr std::string_view kReactionTypeColumn = "reaction_type";
inline constexpr std::string_view kTargetColumn = "ddg";
inline constexpr std::string_view kTransitionStateColumn = "transition_state";

bool is_reserved_column(std::string_view name);

// Sidecar schema file: JSON {"features": [{"name": ..., "role": ...}, ...]}.
// When used with load_dataset only the name -> role mapping matters; the
// table header decides column order.
FeatureSchema load_schema(const std::filesystem::path& path);
void write_schema(const FeatureSchema& schema, const std::filesystem::path& path);

struct LoadOptions {
  // When false a missing ddg column is accepted and the dataset is marked
  // as having no targets.
  bool require_target = true;
};

// Reads a comma-delimited table with a header row. Feature columns keep the
// table's column order; every non-reserved column must appear in the
// schema sidecar and every sidecar entry must appear in the table.
Dataset load_dataset(const std::filesystem::path& table_path,
                     const std::filesystem::path& schema_path, LoadOptions options = {});
Dataset load_dataset(const std::filesystem::path& table_path, const FeatureSchema& roles,
                     LoadOptions options = {});
Dataset parse_dataset(std::string_view table_text, const FeatureSchema& roles,
                      LoadOptions options = {});

void write_dataset(const Dataset& ds, const std::filesystem::path& table_path,
                   const std::filesystem::path& schema_path);
std::string format_table(const Dataset& ds);

// Keeps exactly the columns whose role is in roles, preserving order.
Dataset select_features(const Dataset& ds, std::span<const FeatureRole> roles);
// Column indices (into ds.schema()) retained by select_features.
std::vector<std::size_t> columns_with_roles(const FeatureSchema& schema,
                                            std::span<const FeatureRole> roles);

// Reorders ds's feature columns to match target. Names and roles must
// agree exactly; otherwise InputError.
Dataset conform(const Dataset& ds, const FeatureSchema& target);

}  // namespace stereogate
