#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stereogate/dataset.hpp"

namespace stereogate {

// A Gaussian blob over a subset of features: each covered feature is drawn
// independently as center + spread * N(0, 1).
struct SynthCluster {
  std::map<std::string, double> center;
  double spread = 1.0;
};

enum class LabelMode { none, E, Z, random };

struct SynthType {
  std::string name;
  std::size_t records = 0;
  // Names of clusters this type draws from. Clusters used by one type must
  // cover disjoint feature sets; uncovered features use the defaults.
  std::vector<std::string> clusters;
  LabelMode transition_state = LabelMode::none;
};

// value is added when lo < x <= hi.
struct SynthStep {
  std::string feature;
  double lo = 0.0;
  double hi = 0.0;
  double value = 0.0;
};

struct SynthTarget {
  double intercept = 0.0;
  std::map<std::string, double> linear;
  std::vector<SynthStep> steps;
};

struct SynthSpec {
  std::vector<FeatureSpec> features;
  double default_center = 0.0;
  double default_spread = 1.0;
  std::map<std::string, SynthCluster> clusters;
  std::vector<SynthType> types;
  SynthTarget target;
  double noise = 0.0;
  // Reference seeds the spec was validated with. Informational only.
  std::vector<std::uint64_t> seeds;
};

// Throws InputError on unknown keys, unknown feature or cluster names,
// non-positive counts or non-finite values.
SynthSpec parse_synth_spec(const nlohmann::json& doc);
SynthSpec load_synth_spec(const std::filesystem::path& path);
void validate(const SynthSpec& spec);

// Noise-free target value for a feature vector laid out per spec.features.
double synth_target(const SynthSpec& spec, const std::vector<double>& features);

// Deterministic in (spec, seed). Records are emitted type by type with ids
// "<type>_<index>".
Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

}  // namespace stereogate
