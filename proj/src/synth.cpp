#include "stereogate/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "stereogate/error.hpp"
#include "stereogate/rng.hpp"

namespace stereogate {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InputError(where + ": unknown key '" + key + "'");
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw InputError(where + ": non-finite value");
  return d;
}

std::map<std::string, double> number_map(const json& v, const std::string& where) {
  if (!v.is_object()) throw InputError(where + ": expected an object of numbers");
  std::map<std::string, double> out;
  for (const auto& [k, x] : v.items()) out[k] = number(x, where + "." + k);
  return out;
}

LabelMode parse_label_mode(const json& v, const std::string& where) {
  if (!v.is_string()) throw InputError(where + ": expected \"E\", \"Z\" or \"random\"");
  auto s = v.get<std::string>();
  if (s == "E") return LabelMode::E;
  if (s == "Z") return LabelMode::Z;
  if (s == "random") return LabelMode::random;
  throw InputError(where + ": expected \"E\", \"Z\" or \"random\", found '" + s + "'");
}

}  // namespace

SynthSpec parse_synth_spec(const json& doc) {
  check_keys(doc,
             {"features", "default_center", "default_spread", "clusters", "types", "target", "noise",
              "seeds", "description"},
             "synth spec");
  SynthSpec spec;
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw InputError("synth spec: 'features' array is required");
  }
  for (const auto& f : doc["features"]) {
    check_keys(f, {"name", "role"}, "synth spec feature");
    if (!f.contains("name") || !f["name"].is_string() || !f.contains("role") || !f["role"].is_string()) {
      throw InputError("synth spec feature: needs string 'name' and 'role'");
    }
    spec.features.push_back({f["name"].get<std::string>(), parse_role(f["role"].get<std::string>())});
  }
  if (doc.contains("default_center")) spec.default_center = number(doc["default_center"], "default_center");
  if (doc.contains("default_spread")) spec.default_spread = number(doc["default_spread"], "default_spread");
  if (doc.contains("noise")) spec.noise = number(doc["noise"], "noise");
  if (doc.contains("clusters")) {
    if (!doc["clusters"].is_object()) throw InputError("synth spec: 'clusters' must be an object");
    for (const auto& [name, c] : doc["clusters"].items()) {
      const std::string where = "cluster '" + name + "'";
      check_keys(c, {"center", "spread"}, where);
      SynthCluster cluster;
      if (c.contains("center")) cluster.center = number_map(c["center"], where + ".center");
      if (c.contains("spread")) cluster.spread = number(c["spread"], where + ".spread");
      spec.clusters[name] = std::move(cluster);
    }
  }
  if (!doc.contains("types") || !doc["types"].is_array()) {
    throw InputError("synth spec: 'types' array is required");
  }
  for (const auto& t : doc["types"]) {
    check_keys(t, {"name", "records", "clusters", "transition_state"}, "synth spec type");
    SynthType type;
    if (!t.contains("name") || !t["name"].is_string()) throw InputError("synth spec type: 'name' is required");
    type.name = t["name"].get<std::string>();
    const std::string where = "type '" + type.name + "'";
    if (!t.contains("records") || !t["records"].is_number_integer() || t["records"].get<long long>() <= 0) {
      throw InputError(where + ": 'records' must be a positive integer");
    }
    type.records = t["records"].get<std::size_t>();
    if (t.contains("clusters")) {
      if (!t["clusters"].is_array()) throw InputError(where + ": 'clusters' must be an array of names");
      for (const auto& c : t["clusters"]) {
        if (!c.is_string()) throw InputError(where + ": cluster names must be strings");
        type.clusters.push_back(c.get<std::string>());
      }
    }
    if (t.contains("transition_state")) {
      type.transition_state = parse_label_mode(t["transition_state"], where + ".transition_state");
    }
    spec.types.push_back(std::move(type));
  }
  if (doc.contains("target")) {
    const auto& t = doc["target"];
    check_keys(t, {"intercept", "linear", "steps"}, "target");
    if (t.contains("intercept")) spec.target.intercept = number(t["intercept"], "target.intercept");
    if (t.contains("linear")) spec.target.linear = number_map(t["linear"], "target.linear");
    if (t.contains("steps")) {
      if (!t["steps"].is_array()) throw InputError("target.steps must be an array");
      for (const auto& s : t["steps"]) {
        check_keys(s, {"feature", "lo", "hi", "value"}, "target step");
        if (!s.contains("feature") || !s["feature"].is_string()) {
          throw InputError("target step: 'feature' is required");
        }
        SynthStep step;
        step.feature = s["feature"].get<std::string>();
        step.lo = s.contains("lo") ? number(s["lo"], "target step lo") : -HUGE_VAL;
        step.hi = s.contains("hi") ? number(s["hi"], "target step hi") : HUGE_VAL;
        step.value = s.contains("value") ? number(s["value"], "target step value") : 0.0;
        spec.target.steps.push_back(step);
      }
    }
  }
  if (doc.contains("seeds")) {
    if (!doc["seeds"].is_array()) throw InputError("synth spec: 'seeds' must be an array");
    for (const auto& s : doc["seeds"]) {
      if (!s.is_number_unsigned()) throw InputError("synth spec: seeds must be non-negative integers");
      spec.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  validate(spec);
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open synth spec '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("synth spec '" + path.string() + "': " + e.what());
  }
  return parse_synth_spec(doc);
}

void validate(const SynthSpec& spec) {
  if (spec.features.empty()) throw InputError("synth spec: at least one feature is required");
  FeatureSchema schema(spec.features);
  if (spec.types.empty()) throw InputError("synth spec: at least one type is required");
  auto finite = [](double v, const std::string& what) {
    if (!std::isfinite(v)) throw InputError("synth spec: non-finite " + what);
  };
  finite(spec.default_center, "default_center");
  finite(spec.default_spread, "default_spread");
  finite(spec.noise, "noise");
  if (spec.default_spread < 0) throw InputError("synth spec: default_spread must be >= 0");
  if (spec.noise < 0) throw InputError("synth spec: noise must be >= 0");
  for (const auto& [name, c] : spec.clusters) {
    finite(c.spread, "spread of cluster '" + name + "'");
    if (c.spread < 0) throw InputError("synth spec: cluster '" + name + "' has negative spread");
    for (const auto& [f, v] : c.center) {
      if (!schema.index_of(f)) throw InputError("synth spec: cluster '" + name + "' names unknown feature '" + f + "'");
      finite(v, "center of '" + f + "' in cluster '" + name + "'");
    }
  }
  std::set<std::string> type_names;
  for (const auto& t : spec.types) {
    if (t.records == 0) throw InputError("synth spec: type '" + t.name + "' needs records > 0");
    if (!type_names.insert(t.name).second) throw InputError("synth spec: duplicate type '" + t.name + "'");
    std::set<std::string> covered;
    for (const auto& c : t.clusters) {
      auto it = spec.clusters.find(c);
      if (it == spec.clusters.end()) {
        throw InputError("synth spec: type '" + t.name + "' references unknown cluster '" + c + "'");
      }
      for (const auto& [f, _] : it->second.center) {
        if (!covered.insert(f).second) {
          throw InputError("synth spec: type '" + t.name + "' covers feature '" + f + "' twice");
        }
      }
    }
  }
  finite(spec.target.intercept, "target intercept");
  for (const auto& [f, v] : spec.target.linear) {
    if (!schema.index_of(f)) throw InputError("synth spec: target names unknown feature '" + f + "'");
    finite(v, "target coefficient of '" + f + "'");
  }
  for (const auto& s : spec.target.steps) {
    if (!schema.index_of(s.feature)) {
      throw InputError("synth spec: target step names unknown feature '" + s.feature + "'");
    }
    if (!(s.lo < s.hi)) throw InputError("synth spec: target step on '" + s.feature + "' needs lo < hi");
    finite(s.value, "target step value");
  }
}

double synth_target(const SynthSpec& spec, const std::vector<double>& features) {
  FeatureSchema schema(spec.features);
  double y = spec.target.intercept;
  for (const auto& [f, coef] : spec.target.linear) y += coef * features[*schema.index_of(f)];
  for (const auto& s : spec.target.steps) {
    double x = features[*schema.index_of(s.feature)];
    if (s.lo < x && x <= s.hi) y += s.value;
  }
  return y;
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  FeatureSchema schema(spec.features);
  const std::size_t p = schema.size();
  Rng rng(seed);

  std::vector<ReactionRecord> records;
  for (const auto& type : spec.types) {
    std::vector<double> centers(p, spec.default_center);
    std::vector<double> spreads(p, spec.default_spread);
    for (const auto& cname : type.clusters) {
      const auto& cluster = spec.clusters.at(cname);
      for (const auto& [f, v] : cluster.center) {
        std::size_t j = *schema.index_of(f);
        centers[j] = v;
        spreads[j] = cluster.spread;
      }
    }
    for (std::size_t i = 0; i < type.records; ++i) {
      ReactionRecord rec;
      char suffix[32];
      std::snprintf(suffix, sizeof suffix, "_%04zu", i);
      rec.reaction_id = type.name + suffix;
      rec.reaction_type = type.name;
      rec.features.resize(p);
      for (std::size_t j = 0; j < p; ++j) rec.features[j] = centers[j] + spreads[j] * rng.normal();
      rec.ddg = synth_target(spec, rec.features) + spec.noise * rng.normal();
      switch (type.transition_state) {
        case LabelMode::none: break;
        case LabelMode::E: rec.transition_state = TransitionState::E; break;
        case LabelMode::Z: rec.transition_state = TransitionState::Z; break;
        case LabelMode::random:
          rec.transition_state = rng.uniform() < 0.5 ? TransitionState::E : TransitionState::Z;
          break;
      }
      records.push_back(std::move(rec));
    }
  }
  return Dataset(std::move(schema), std::move(records));
}

}  // namespace stereogate
