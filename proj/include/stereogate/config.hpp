#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "stereogate/composite.hpp"
#include "stereogate/protocols.hpp"

namespace stereogate {

// Settings for one CLI run. Every field has a default; a JSON config file
// overrides any subset. Unknown keys are rejected at every level. Relative
// paths inside a config file are resolved against the file's directory.
struct RunConfig {
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> schema;
  // Test table for the out-of-sample protocol; its schema defaults to schema.
  std::optional<std::filesystem::path> test_data;
  std::optional<std::filesystem::path> test_schema;
  std::optional<std::filesystem::path> out;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  CompositeConfig composite;

  // kfold protocol.
  ModelSpec kfold_model;
  std::size_t kfold_k = 2;
  std::size_t kfold_repeats = 100;

  EzConfig ez;
};

RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Effective configuration, every field spelled out. Parsing the result
// yields the same RunConfig.
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace stereogate
