#pragma once
// Small builders shared by the unit tests.

#include <filesystem>
#include <random>
#include <string>

#include "drawmap/drawmap.hpp"

namespace fx {

using namespace drawmap;

inline Feature3D feature(std::string id, FeatureType type, std::map<std::string, double> params = {}) {
  Feature3D f;
  f.id = std::move(id);
  f.feature_type = std::move(type);
  f.params = std::move(params);
  return f;
}

inline EnrichedDescriptor desc(std::string entity_id, NormalizedType t, std::optional<double> value,
                               std::optional<std::string> target = std::nullopt) {
  EnrichedDescriptor d;
  d.entity_id = std::move(entity_id);
  d.normalized_type = t;
  d.numeric_value = value;
  d.target_category = std::move(target);
  d.enrich_confidence = 0.95;
  return d;
}

inline DrawingEntity entity(std::string id, std::string raw, EntityType type = EntityType::dimension) {
  DrawingEntity e;
  e.id = std::move(id);
  e.raw_text = std::move(raw);
  e.entity_type = type;
  return e;
}

/// Defaults with every heuristic off, for isolating the base formula.
inline PipelineConfig no_heuristics() {
  PipelineConfig c;
  c.heuristics_enabled = false;
  return c;
}

inline std::string data_dir() { return DRAWMAP_DATA_DIR; }

struct Bracket {
  FeaturesFile features;
  EntitiesFile entities;
  GroundTruth truth;
  CompatibilityTable table;
};

inline Bracket load_bracket() {
  const std::string dir = data_dir() + "/bracket/";
  Bracket f;
  f.features = load_json_file<FeaturesFile>(dir + "features.json");
  f.entities = load_json_file<EntitiesFile>(dir + "entities.json");
  f.truth = load_json_file<GroundTruth>(dir + "truth.json");
  f.table = compatibility_from_json(parse_json_text(read_text_file(dir + "compatibility.json"), "compat"));
  return f;
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("drawmap_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

/// Two holes of one diameter and a "Ø6" callout: a guaranteed near-tie.
struct NearTie {
  std::vector<Feature3D> features{feature("F1", FeatureKind::hole, {{"diameter", 6.0}}),
                                  feature("F2", FeatureKind::hole, {{"diameter", 6.05}})};
  std::vector<DrawingEntity> entities{entity("E1", "Ø6"), entity("E2", "Ø6.05")};
};

}  // namespace fx
