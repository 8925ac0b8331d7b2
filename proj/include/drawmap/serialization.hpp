#pragma once
// JSON encoding of the domain types and the on-disk file schemas
// (features, entities, ground truth, unified spec). Key order is the
// library's sorted order, so encode -> decode -> encode is byte-stable.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "drawmap/core.hpp"

namespace drawmap {

using Json = nlohmann::json;

/// Thrown for malformed documents; carries a human-readable location.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename E>
E parse_enum(const Json& j, std::optional<E> (*parser)(std::string_view), const char* what) {
  const auto s = j.get<std::string>();
  if (auto v = parser(s)) return *v;
  throw FormatError(std::string("unknown ") + what + " '" + s + "'");
}

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline const Json& require(const Json& j, const char* key, const char* owner) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string(owner) + ": missing required key '" + key + "'");
  }
  return j.at(key);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Inputs

inline void to_json(Json& j, const Vec3& v) { j = Json::array({v.x, v.y, v.z}); }
inline void from_json(const Json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw FormatError("3-vector must be [x, y, z]");
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline void to_json(Json& j, const Box3& b) { j = Json{{"min", b.min}, {"max", b.max}}; }
inline void from_json(const Json& j, Box3& b) {
  b.min = detail::require(j, "min", "bbox").get<Vec3>();
  b.max = detail::require(j, "max", "bbox").get<Vec3>();
}

inline void to_json(Json& j, const Box2& b) { j = Json::array({b.x0, b.y0, b.x1, b.y1}); }
inline void from_json(const Json& j, Box2& b) {
  if (!j.is_array() || j.size() != 4) throw FormatError("drawing bbox must be [x0, y0, x1, y1]");
  b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline void to_json(Json& j, const Feature3D& f) {
  j = Json{{"id", f.id},
           {"feature_type", f.feature_type.name()},
           {"params", f.params},
           {"afr_confidence", f.afr_confidence}};
  Json meta = Json::object();
  detail::put_optional(meta, "pattern_id", f.metadata.pattern_id);
  detail::put_optional(meta, "symmetry_group", f.metadata.symmetry_group);
  if (f.metadata.instance_count != 1) meta["instance_count"] = f.metadata.instance_count;
  if (!meta.empty()) j["metadata"] = meta;
  detail::put_optional(j, "centroid", f.centroid);
  detail::put_optional(j, "bbox", f.bbox);
}

inline void from_json(const Json& j, Feature3D& f) {
  f.id = detail::require(j, "id", "feature").get<std::string>();
  f.feature_type = FeatureType::parse(detail::require(j, "feature_type", "feature").get<std::string>());
  f.params = j.value("params", std::map<std::string, double>{});
  f.afr_confidence = j.value("afr_confidence", 1.0);
  if (j.contains("metadata")) {
    const auto& m = j.at("metadata");
    f.metadata.pattern_id = detail::get_optional<std::string>(m, "pattern_id");
    f.metadata.symmetry_group = detail::get_optional<std::string>(m, "symmetry_group");
    f.metadata.instance_count = m.value("instance_count", 1);
  }
  f.centroid = detail::get_optional<Vec3>(j, "centroid");
  f.bbox = detail::get_optional<Box3>(j, "bbox");
}

inline void to_json(Json& j, const DrawingEntity& e) {
  Json values = Json::object();
  for (const auto& [k, v] : e.semantic_values) {
    std::visit([&](const auto& x) { values[k] = x; }, v);
  }
  j = Json{{"id", e.id},
           {"entity_type", to_string(e.entity_type)},
           {"semantic_values", values},
           {"raw_text", e.raw_text}};
  Json ctx = Json::object();
  detail::put_optional(ctx, "bbox", e.context.bbox);
  if (!e.context.neighbors.empty()) ctx["neighbors"] = e.context.neighbors;
  detail::put_optional(ctx, "view", e.context.view);
  detail::put_optional(ctx, "image_ref", e.context.image_ref);
  if (!ctx.empty()) j["context"] = ctx;
}

inline void from_json(const Json& j, DrawingEntity& e) {
  e.id = detail::require(j, "id", "entity").get<std::string>();
  e.entity_type = detail::parse_enum<EntityType>(detail::require(j, "entity_type", "entity"),
                                                 parse_EntityType, "entity_type");
  e.raw_text = detail::require(j, "raw_text", "entity").get<std::string>();
  e.semantic_values.clear();
  if (j.contains("semantic_values")) {
    for (const auto& [k, v] : j.at("semantic_values").items()) {
      if (v.is_number()) {
        e.semantic_values[k] = v.get<double>();
      } else if (v.is_string()) {
        e.semantic_values[k] = v.get<std::string>();
      } else {
        throw FormatError("entity " + e.id + ": semantic value '" + k + "' must be number or string");
      }
    }
  }
  e.context = {};
  if (j.contains("context")) {
    const auto& c = j.at("context");
    e.context.bbox = detail::get_optional<Box2>(c, "bbox");
    e.context.neighbors = c.value("neighbors", std::vector<std::string>{});
    e.context.view = detail::get_optional<std::string>(c, "view");
    e.context.image_ref = detail::get_optional<std::string>(c, "image_ref");
  }
}

inline void to_json(Json& j, const EnrichedDescriptor& d) {
  j = Json{{"entity_id", d.entity_id},
           {"normalized_type", to_string(d.normalized_type)},
           {"unit", d.unit},
           {"multiplicity", d.multiplicity},
           {"has_diameter_symbol", d.has_diameter_symbol},
           {"enrich_confidence", d.enrich_confidence},
           {"source", d.source}};
  detail::put_optional(j, "numeric_value", d.numeric_value);
  detail::put_optional(j, "tolerance", d.tolerance);
  detail::put_optional(j, "pitch", d.pitch);
  detail::put_optional(j, "secondary_depth", d.secondary_depth);
  detail::put_optional(j, "target_category", d.target_category);
  if (!d.datums.empty()) j["datums"] = d.datums;
}

inline void from_json(const Json& j, EnrichedDescriptor& d) {
  d.entity_id = detail::require(j, "entity_id", "descriptor").get<std::string>();
  d.normalized_type = detail::parse_enum<NormalizedType>(
      detail::require(j, "normalized_type", "descriptor"), parse_NormalizedType, "normalized_type");
  d.unit = j.value("unit", std::string("mm"));
  d.multiplicity = j.value("multiplicity", 1);
  d.has_diameter_symbol = j.value("has_diameter_symbol", false);
  d.enrich_confidence = detail::require(j, "enrich_confidence", "descriptor").get<double>();
  d.source = j.value("source", std::string("external_vlm"));
  d.numeric_value = detail::get_optional<double>(j, "numeric_value");
  d.tolerance = detail::get_optional<double>(j, "tolerance");
  d.pitch = detail::get_optional<double>(j, "pitch");
  d.secondary_depth = detail::get_optional<double>(j, "secondary_depth");
  d.target_category = detail::get_optional<std::string>(j, "target_category");
  d.datums = j.value("datums", std::vector<std::string>{});
  if (d.multiplicity < 1) throw FormatError("descriptor multiplicity must be >= 1");
  if (!(d.enrich_confidence >= 0.0 && d.enrich_confidence <= 1.0)) {
    throw FormatError("descriptor enrich_confidence outside [0,1]");
  }
}

// ---------------------------------------------------------------------------
// Config

inline void to_json(Json& j, const PipelineConfig& c) {
  j = Json{{"w_t", c.w_t},
           {"w_d", c.w_d},
           {"w_c", c.w_c},
           {"theta_cand", c.theta_cand},
           {"rho", c.rho},
           {"epsilon_mm", c.epsilon_mm},
           {"theta_escal", c.theta_escal},
           {"mismatch_factor", c.mismatch_factor},
           {"diameter_symbol_bonus", c.diameter_symbol_bonus},
           {"missing_symbol_penalty", c.missing_symbol_penalty},
           {"gdt_prior_bonus", c.gdt_prior_bonus},
           {"heuristic_cap", c.heuristic_cap},
           {"neutral_context", c.neutral_context},
           {"enrich_conf_exact", c.enrich_conf_exact},
           {"enrich_conf_partial", c.enrich_conf_partial},
           {"enrich_conf_unknown", c.enrich_conf_unknown},
           {"heuristics_enabled", c.heuristics_enabled},
           {"context_enabled", c.context_enabled},
           {"vlm_selection_enabled", c.vlm_selection_enabled},
           {"llm_escalation_enabled", c.llm_escalation_enabled},
           {"semantic_routing_enabled", c.semantic_routing_enabled},
           {"pattern_expansion_enabled", c.pattern_expansion_enabled},
           {"selection_mode", c.selection_mode == SelectionMode::argmax ? "argmax" : "near_tie"},
           {"escalation_retries", c.escalation_retries},
           {"max_in_flight", c.max_in_flight},
           {"ablation", c.ablation}};
}

/// Missing keys keep the defaults, so config files can be partial overrides.
inline void from_json(const Json& j, PipelineConfig& c) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  const PipelineConfig base = c;
#define DRAWMAP_CFG(field) c.field = j.value(#field, base.field)
  DRAWMAP_CFG(w_t);
  DRAWMAP_CFG(w_d);
  DRAWMAP_CFG(w_c);
  DRAWMAP_CFG(theta_cand);
  DRAWMAP_CFG(rho);
  DRAWMAP_CFG(epsilon_mm);
  DRAWMAP_CFG(theta_escal);
  DRAWMAP_CFG(mismatch_factor);
  DRAWMAP_CFG(diameter_symbol_bonus);
  DRAWMAP_CFG(missing_symbol_penalty);
  DRAWMAP_CFG(gdt_prior_bonus);
  DRAWMAP_CFG(heuristic_cap);
  DRAWMAP_CFG(neutral_context);
  DRAWMAP_CFG(enrich_conf_exact);
  DRAWMAP_CFG(enrich_conf_partial);
  DRAWMAP_CFG(enrich_conf_unknown);
  DRAWMAP_CFG(heuristics_enabled);
  DRAWMAP_CFG(context_enabled);
  DRAWMAP_CFG(vlm_selection_enabled);
  DRAWMAP_CFG(llm_escalation_enabled);
  DRAWMAP_CFG(semantic_routing_enabled);
  DRAWMAP_CFG(pattern_expansion_enabled);
  DRAWMAP_CFG(escalation_retries);
  DRAWMAP_CFG(max_in_flight);
  DRAWMAP_CFG(ablation);
#undef DRAWMAP_CFG
  if (j.contains("selection_mode")) {
    const auto mode = j.at("selection_mode").get<std::string>();
    if (mode == "argmax") {
      c.selection_mode = SelectionMode::argmax;
    } else if (mode == "near_tie") {
      c.selection_mode = SelectionMode::near_tie;
    } else {
      throw FormatError("unknown selection_mode '" + mode + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Scoring and records

inline void to_json(Json& j, const TraceStep& s) {
  j = Json{{"kind", s.kind}, {"label", s.label}, {"value", s.value}};
  if (!s.detail.empty()) j["detail"] = s.detail;
}
inline void from_json(const Json& j, TraceStep& s) {
  s.kind = j.at("kind").get<std::string>();
  s.label = j.at("label").get<std::string>();
  s.value = j.at("value").get<double>();
  s.detail = j.value("detail", std::string{});
}

inline void to_json(Json& j, const ScoredCandidate& c) {
  Json factors = Json::array();
  for (const auto& [label, f] : c.multiplicative_factors) {
    factors.push_back(Json{{"label", label}, {"factor", f}});
  }
  j = Json{{"feature_id", c.feature_id}, {"entity_id", c.entity_id},
           {"s_type", c.s_type},         {"s_dim", c.s_dim},
           {"s_ctx", c.s_ctx},           {"h_adjust", c.h_adjust},
           {"factors", factors},         {"numeric_mismatch", c.numeric_mismatch},
           {"s_final", c.s_final},       {"trace", c.trace}};
}
inline void from_json(const Json& j, ScoredCandidate& c) {
  c.feature_id = j.at("feature_id").get<std::string>();
  c.entity_id = j.at("entity_id").get<std::string>();
  c.s_type = j.at("s_type").get<double>();
  c.s_dim = j.at("s_dim").get<double>();
  c.s_ctx = j.at("s_ctx").get<double>();
  c.h_adjust = j.at("h_adjust").get<double>();
  c.multiplicative_factors.clear();
  for (const auto& f : j.value("factors", Json::array())) {
    c.multiplicative_factors.emplace_back(f.at("label").get<std::string>(), f.at("factor").get<double>());
  }
  c.numeric_mismatch = j.value("numeric_mismatch", false);
  c.s_final = j.at("s_final").get<double>();
  c.trace = j.value("trace", std::vector<TraceStep>{});
}

inline void to_json(Json& j, const ProvenanceEvent& e) {
  j = Json{{"stage", e.stage}, {"timestamp", e.timestamp}, {"actor", e.actor}, {"digest", e.digest}};
  if (!e.payload.empty()) j["payload"] = e.payload;
}
inline void from_json(const Json& j, ProvenanceEvent& e) {
  e.stage = j.at("stage").get<std::string>();
  e.timestamp = j.at("timestamp").get<std::string>();
  e.actor = j.at("actor").get<std::string>();
  e.digest = j.at("digest").get<std::string>();
  e.payload = j.value("payload", std::string{});
}

inline void to_json(Json& j, const MappingRecord& m) {
  j = Json{{"id", m.id},
           {"feature_id", m.feature_id},
           {"entity_id", m.entity_id},
           {"method", to_string(m.method)},
           {"confidence", m.confidence},
           {"score", m.score},
           {"rationale", m.rationale},
           {"status", to_string(m.status)},
           {"provenance", m.provenance}};
  if (!m.candidates.empty()) j["candidates"] = m.candidates;
}
inline void from_json(const Json& j, MappingRecord& m) {
  m.id = j.at("id").get<std::string>();
  m.feature_id = j.at("feature_id").get<std::string>();
  m.entity_id = j.at("entity_id").get<std::string>();
  m.method = detail::parse_enum<MappingMethod>(j.at("method"), parse_MappingMethod, "method");
  m.confidence = j.at("confidence").get<double>();
  m.score = j.value("score", 0.0);
  m.rationale = j.value("rationale", std::string{});
  m.status = detail::parse_enum<MappingStatus>(j.at("status"), parse_MappingStatus, "status");
  m.provenance = j.value("provenance", std::vector<ProvenanceEvent>{});
  m.candidates = j.value("candidates", std::vector<ScoredCandidate>{});
}

inline void to_json(Json& j, const UnifiedSpec& s) {
  Json unmapped = Json::array();
  for (const auto& u : s.unmapped_entities) {
    unmapped.push_back(Json{{"entity_id", u.entity_id}, {"reason", u.reason}});
  }
  j = Json{{"spec_version", s.spec_version},
           {"part_id", s.part_id},
           {"revision", s.revision},
           {"mappings", s.mappings},
           {"unmapped_entities", unmapped},
           {"unconstrained_features", s.unconstrained_features},
           {"entity_ids", s.entity_ids},
           {"feature_ids", s.feature_ids},
           {"config_snapshot", s.config_snapshot}};
  if (s.approval) {
    j["approval"] = Json{{"reviewer", s.approval->reviewer}, {"timestamp", s.approval->timestamp}};
  } else {
    j["approval"] = nullptr;
  }
}
inline void from_json(const Json& j, UnifiedSpec& s) {
  s.spec_version = detail::require(j, "spec_version", "spec").get<std::string>();
  s.part_id = detail::require(j, "part_id", "spec").get<std::string>();
  s.revision = j.value("revision", 0);
  s.mappings = detail::require(j, "mappings", "spec").get<std::vector<MappingRecord>>();
  s.unmapped_entities.clear();
  for (const auto& u : detail::require(j, "unmapped_entities", "spec")) {
    s.unmapped_entities.push_back({u.at("entity_id").get<std::string>(), u.value("reason", std::string{})});
  }
  s.unconstrained_features = j.value("unconstrained_features", std::vector<std::string>{});
  s.entity_ids = j.value("entity_ids", std::vector<std::string>{});
  s.feature_ids = j.value("feature_ids", std::vector<std::string>{});
  s.approval.reset();
  if (j.contains("approval") && !j.at("approval").is_null()) {
    const auto& a = j.at("approval");
    s.approval = Approval{a.at("reviewer").get<std::string>(), a.at("timestamp").get<std::string>()};
  }
  s.config_snapshot = PipelineConfig{};
  if (j.contains("config_snapshot")) from_json(j.at("config_snapshot"), s.config_snapshot);
}

// ---------------------------------------------------------------------------
// Files

struct GroundTruth {
  std::string part_id;
  std::set<std::pair<std::string, std::string>> links;  // (feature_id, entity_id)
};

inline void to_json(Json& j, const GroundTruth& g) {
  Json links = Json::array();
  for (const auto& [f, e] : g.links) links.push_back(Json::array({f, e}));
  j = Json{{"part_id", g.part_id}, {"links", links}};
}
inline void from_json(const Json& j, GroundTruth& g) {
  g.part_id = j.value("part_id", std::string{});
  g.links.clear();
  for (const auto& l : detail::require(j, "links", "ground truth")) {
    if (!l.is_array() || l.size() != 2) throw FormatError("ground truth link must be [feature_id, entity_id]");
    g.links.emplace(l[0].get<std::string>(), l[1].get<std::string>());
  }
}

struct FeaturesFile {
  std::string part_id;
  std::vector<Feature3D> features;
};

struct EntitiesFile {
  std::string part_id;
  std::vector<DrawingEntity> entities;
};

inline void to_json(Json& j, const FeaturesFile& f) { j = Json{{"part_id", f.part_id}, {"features", f.features}}; }
inline void from_json(const Json& j, FeaturesFile& f) {
  f.part_id = j.value("part_id", std::string{});
  f.features = detail::require(j, "features", "features file").get<std::vector<Feature3D>>();
}
inline void to_json(Json& j, const EntitiesFile& f) { j = Json{{"part_id", f.part_id}, {"entities", f.entities}}; }
inline void from_json(const Json& j, EntitiesFile& f) {
  f.part_id = j.value("part_id", std::string{});
  f.entities = detail::require(j, "entities", "entities file").get<std::vector<DrawingEntity>>();
}

/// Canonical text form: two-space indent, trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Parse JSON text, reporting syntax errors as "line L, column C: ...".
inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(err.byte == 0 ? 0 : err.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << origin << ": line " << line << ", column " << col << ": " << err.what();
    throw FormatError(msg.str());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Read and decode a document; all failures surface as FormatError.
template <typename T>
T load_json_file(const std::string& path) {
  const Json j = parse_json_text(read_text_file(path), path);
  try {
    return j.get<T>();
  } catch (const FormatError& err) {
    throw FormatError(path + ": " + err.what());
  } catch (const Json::exception& err) {
    throw FormatError(path + ": " + err.what());
  }
}

/// Write via a sibling temp file and rename, so readers never see a partial file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw FormatError(path + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw FormatError(path + ": rename failed: " + ec.message());
  }
}

}  // namespace drawmap
