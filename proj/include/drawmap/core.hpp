#pragma once
// Shared domain types for the drawing-to-CAD mapping engine.
//
// Everything here is a plain value type. Units are millimetres and degrees
// throughout; conversion happens once at ingestion (see normalize_unit).

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace drawmap {

// ---------------------------------------------------------------------------
// Enum <-> string tables

namespace detail {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

template <typename E, std::size_t N>
constexpr std::string_view lookup_name(const NameTable<E, N>& table, E value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
constexpr std::optional<E> lookup_value(const NameTable<E, N>& table, std::string_view name) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  return std::nullopt;
}

}  // namespace detail

#define DRAWMAP_ENUM_STRINGS(Enum, table)                                          \
  inline std::string_view to_string(Enum v) { return detail::lookup_name(table, v); } \
  inline std::optional<Enum> parse_##Enum(std::string_view s) {                    \
    return detail::lookup_value(table, s);                                         \
  }

enum class FeatureKind {
  hole, bore, drill, slot, pocket, groove, fillet, round, boss, cylinder, plane, chamfer,
  thread_hole, other
};

inline constexpr detail::NameTable<FeatureKind, 14> kFeatureKindNames{{
    {FeatureKind::hole, "hole"},         {FeatureKind::bore, "bore"},
    {FeatureKind::drill, "drill"},       {FeatureKind::slot, "slot"},
    {FeatureKind::pocket, "pocket"},     {FeatureKind::groove, "groove"},
    {FeatureKind::fillet, "fillet"},     {FeatureKind::round, "round"},
    {FeatureKind::boss, "boss"},         {FeatureKind::cylinder, "cylinder"},
    {FeatureKind::plane, "plane"},       {FeatureKind::chamfer, "chamfer"},
    {FeatureKind::thread_hole, "thread_hole"}, {FeatureKind::other, "other"},
}};
DRAWMAP_ENUM_STRINGS(FeatureKind, kFeatureKindNames)

enum class EntityType { dimension, gdt_frame, surface_roughness, note, thread_callout, datum };

inline constexpr detail::NameTable<EntityType, 6> kEntityTypeNames{{
    {EntityType::dimension, "dimension"},
    {EntityType::gdt_frame, "gdt_frame"},
    {EntityType::surface_roughness, "surface_roughness"},
    {EntityType::note, "note"},
    {EntityType::thread_callout, "thread_callout"},
    {EntityType::datum, "datum"},
}};
DRAWMAP_ENUM_STRINGS(EntityType, kEntityTypeNames)

enum class NormalizedType {
  diameter, radius, linear, depth, thread, angle, countersink, counterbore,
  gdt_position, gdt_profile, gdt_runout, gdt_flatness, datum_ref, roughness, unknown
};

inline constexpr detail::NameTable<NormalizedType, 15> kNormalizedTypeNames{{
    {NormalizedType::diameter, "diameter"},
    {NormalizedType::radius, "radius"},
    {NormalizedType::linear, "linear"},
    {NormalizedType::depth, "depth"},
    {NormalizedType::thread, "thread"},
    {NormalizedType::angle, "angle"},
    {NormalizedType::countersink, "countersink"},
    {NormalizedType::counterbore, "counterbore"},
    {NormalizedType::gdt_position, "gdt_position"},
    {NormalizedType::gdt_profile, "gdt_profile"},
    {NormalizedType::gdt_runout, "gdt_runout"},
    {NormalizedType::gdt_flatness, "gdt_flatness"},
    {NormalizedType::datum_ref, "datum_ref"},
    {NormalizedType::roughness, "roughness"},
    {NormalizedType::unknown, "unknown"},
}};
DRAWMAP_ENUM_STRINGS(NormalizedType, kNormalizedTypeNames)

// Types whose numeric value is a size that can be compared against a 3D parameter.
constexpr bool is_dimensional(NormalizedType t) {
  switch (t) {
    case NormalizedType::diameter:
    case NormalizedType::radius:
    case NormalizedType::linear:
    case NormalizedType::depth:
    case NormalizedType::thread:
    case NormalizedType::angle:
    case NormalizedType::countersink:
    case NormalizedType::counterbore:
      return true;
    default:
      return false;
  }
}

constexpr bool is_gdt(NormalizedType t) {
  return t == NormalizedType::gdt_position || t == NormalizedType::gdt_profile ||
         t == NormalizedType::gdt_runout || t == NormalizedType::gdt_flatness;
}

/// Feature category a descriptor points at when nothing more specific is known.
inline std::optional<std::string> default_target_category(NormalizedType t) {
  switch (t) {
    case NormalizedType::diameter:
    case NormalizedType::thread:
    case NormalizedType::depth:
    case NormalizedType::counterbore:
    case NormalizedType::countersink:
      return std::string("hole");
    case NormalizedType::radius:
      return std::string("fillet");
    default:
      return std::nullopt;
  }
}

enum class MappingMethod { deterministic, deterministic_vlm, llm, human };

inline constexpr detail::NameTable<MappingMethod, 4> kMappingMethodNames{{
    {MappingMethod::deterministic, "deterministic"},
    {MappingMethod::deterministic_vlm, "deterministic_vlm"},
    {MappingMethod::llm, "llm"},
    {MappingMethod::human, "human"},
}};
DRAWMAP_ENUM_STRINGS(MappingMethod, kMappingMethodNames)

enum class MappingStatus { accepted, flagged, rejected, human_edited };

inline constexpr detail::NameTable<MappingStatus, 4> kMappingStatusNames{{
    {MappingStatus::accepted, "accepted"},
    {MappingStatus::flagged, "flagged"},
    {MappingStatus::rejected, "rejected"},
    {MappingStatus::human_edited, "human_edited"},
}};
DRAWMAP_ENUM_STRINGS(MappingStatus, kMappingStatusNames)

// Accepted and human-edited records count as predicted links.
constexpr bool is_active(MappingStatus s) {
  return s == MappingStatus::accepted || s == MappingStatus::human_edited;
}

#undef DRAWMAP_ENUM_STRINGS

// ---------------------------------------------------------------------------
// Feature types

/// A built-in feature kind, or `other` carrying a free-form label.
class FeatureType {
 public:
  FeatureType() = default;
  FeatureType(FeatureKind kind) : kind_(kind) {}  // NOLINT(implicit)

  static FeatureType other(std::string label) {
    FeatureType t(FeatureKind::other);
    t.label_ = std::move(label);
    return t;
  }

  /// Built-in names map to their kind; anything else becomes other(label).
  static FeatureType parse(std::string_view name) {
    if (auto k = parse_FeatureKind(name); k && *k != FeatureKind::other) return FeatureType(*k);
    return other(std::string(name));
  }

  FeatureKind kind() const { return kind_; }
  const std::string& label() const { return label_; }

  /// Canonical name used by compatibility tables and serialization.
  std::string name() const {
    return kind_ == FeatureKind::other ? label_ : std::string(to_string(kind_));
  }

  friend bool operator==(const FeatureType&, const FeatureType&) = default;

 private:
  FeatureKind kind_ = FeatureKind::other;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Geometry helpers

struct Vec3 {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct Box3 {
  Vec3 min, max;
  friend bool operator==(const Box3&, const Box3&) = default;
};

/// Axis-aligned box in drawing sheet coordinates.
struct Box2 {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  friend bool operator==(const Box2&, const Box2&) = default;
};

// ---------------------------------------------------------------------------
// Inputs

struct FeatureMetadata {
  std::optional<std::string> pattern_id;
  std::optional<std::string> symmetry_group;
  // Number of physical instances this record stands for when AFR reports a
  // pattern as one feature.
  int instance_count = 1;
  friend bool operator==(const FeatureMetadata&, const FeatureMetadata&) = default;
};

/// One recognized CAD feature.
struct Feature3D {
  std::string id;
  FeatureType feature_type;
  std::map<std::string, double> params;  // diameter, radius, depth, width, length, angle, ...
  double afr_confidence = 1.0;
  FeatureMetadata metadata;
  std::optional<Vec3> centroid;
  std::optional<Box3> bbox;

  std::optional<double> param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Feature3D&, const Feature3D&) = default;
};

using SemanticValue = std::variant<double, std::string>;

struct EntityContext {
  std::optional<Box2> bbox;
  std::vector<std::string> neighbors;
  std::optional<std::string> view;
  std::optional<std::string> image_ref;  // opaque cropped-region reference
  friend bool operator==(const EntityContext&, const EntityContext&) = default;
};

/// One annotation extracted from the 2D drawing.
struct DrawingEntity {
  std::string id;
  EntityType entity_type = EntityType::dimension;
  std::map<std::string, SemanticValue> semantic_values;  // value, unit, dim_kind, target
  std::string raw_text;
  EntityContext context;

  /// Spatial evidence is usable only when the entity has been located on the sheet.
  bool has_spatial_cues() const { return context.bbox.has_value(); }

  std::optional<double> number(const std::string& key) const {
    auto it = semantic_values.find(key);
    if (it == semantic_values.end()) return std::nullopt;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    return std::nullopt;
  }

  std::optional<std::string> text(const std::string& key) const {
    auto it = semantic_values.find(key);
    if (it == semantic_values.end()) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    return std::nullopt;
  }

  friend bool operator==(const DrawingEntity&, const DrawingEntity&) = default;
};

/// Normalized semantic form of a drawing entity, produced once before scoring.
struct EnrichedDescriptor {
  std::string entity_id;
  NormalizedType normalized_type = NormalizedType::unknown;
  std::optional<double> numeric_value;  // in `unit`
  std::string unit = "mm";
  std::optional<double> tolerance;      // symmetric +/- band, or GD&T tolerance zone
  std::optional<double> pitch;          // thread pitch, parsed but never scored
  std::optional<double> secondary_depth;
  std::optional<std::string> target_category;  // feature type name
  int multiplicity = 1;
  bool has_diameter_symbol = false;
  double enrich_confidence = 0.0;
  std::vector<std::string> datums;
  std::string source = "rule_based";  // which backend produced it; fallbacks say so

  friend bool operator==(const EnrichedDescriptor&, const EnrichedDescriptor&) = default;
};

// ---------------------------------------------------------------------------
// Configuration

enum class SelectionMode { near_tie, argmax };

/// Every tunable constant of the pipeline. Defaults are the published values.
struct PipelineConfig {
  double w_t = 0.4;
  double w_d = 0.4;
  double w_c = 0.2;
  double theta_cand = 0.3;
  double rho = 0.9;
  double epsilon_mm = 0.1;
  double theta_escal = 0.6;
  double mismatch_factor = 0.3;
  double diameter_symbol_bonus = 0.1;
  double missing_symbol_penalty = 0.7;
  double gdt_prior_bonus = 0.1;
  double heuristic_cap = 0.2;
  double neutral_context = 0.5;

  // Rule-based enrichment confidence table.
  double enrich_conf_exact = 0.95;
  double enrich_conf_partial = 0.7;
  double enrich_conf_unknown = 0.3;

  bool heuristics_enabled = true;
  bool context_enabled = true;
  bool vlm_selection_enabled = true;
  bool llm_escalation_enabled = true;
  // Route each dimension kind to its matching 3D parameter. When off, a
  // dimension is compared against every scalar parameter and the best wins.
  bool semantic_routing_enabled = true;
  bool pattern_expansion_enabled = true;
  SelectionMode selection_mode = SelectionMode::near_tie;

  int escalation_retries = 1;
  int max_in_flight = 4;

  std::string ablation = "full";

  /// Invariant violations, empty when the configuration is usable.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (context_enabled) {
      if (std::abs(w_t + w_d + w_c - 1.0) > 1e-9) out.emplace_back("weights must sum to 1");
    } else if (w_c != 0.0) {
      out.emplace_back("w_c must be 0 when context scoring is disabled");
    }
    if (!(rho > 0.0 && rho <= 1.0)) out.emplace_back("rho must lie in (0,1]");
    if (!(epsilon_mm > 0.0)) out.emplace_back("epsilon_mm must be positive");
    if (escalation_retries < 0) out.emplace_back("escalation_retries must be >= 0");
    if (max_in_flight < 1) out.emplace_back("max_in_flight must be >= 1");
    return out;
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// ---------------------------------------------------------------------------
// Scoring output

/// One arithmetic step of a score computation. `kind` is "component",
/// "term" (added into the pre-factor sum), "subtotal", "note", "factor" (multiplied
/// in), "gate", or "final".
struct TraceStep {
  std::string kind;
  std::string label;
  double value = 0.0;
  std::string detail;
  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct ScoredCandidate {
  std::string feature_id;
  std::string entity_id;
  double s_type = 0.0;
  double s_dim = 0.0;
  double s_ctx = 0.0;
  double h_adjust = 0.0;
  std::vector<std::pair<std::string, double>> multiplicative_factors;
  bool numeric_mismatch = false;
  double s_final = 0.0;
  std::vector<TraceStep> trace;

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

// ---------------------------------------------------------------------------
// Output document

struct ProvenanceEvent {
  std::string stage;      // scoring, resolve, multimodal, constrained_llm, review, ...
  std::string timestamp;  // ISO-8601, injected
  std::string actor;      // engine, vlm, llm, human:<name>
  std::string digest;     // digest of payload
  std::string payload;    // raw payload (e.g. model response text); may be empty
  friend bool operator==(const ProvenanceEvent&, const ProvenanceEvent&) = default;
};

struct MappingRecord {
  std::string id;
  std::string feature_id;
  std::string entity_id;
  MappingMethod method = MappingMethod::deterministic;
  double confidence = 0.0;
  double score = 0.0;  // s_final of the chosen pair
  std::string rationale;
  MappingStatus status = MappingStatus::accepted;
  std::vector<ProvenanceEvent> provenance;
  // Competing candidates kept for the reviewer; non-empty on flagged items.
  std::vector<ScoredCandidate> candidates;

  friend bool operator==(const MappingRecord&, const MappingRecord&) = default;
};

inline std::string mapping_id(const std::string& feature_id, const std::string& entity_id) {
  return feature_id + "~" + entity_id;
}

struct UnmappedEntity {
  std::string entity_id;
  std::string reason;
  friend bool operator==(const UnmappedEntity&, const UnmappedEntity&) = default;
};

struct Approval {
  std::string reviewer;
  std::string timestamp;
  friend bool operator==(const Approval&, const Approval&) = default;
};

inline constexpr std::string_view kSpecVersion = "1.0";

struct UnifiedSpec {
  std::string spec_version{kSpecVersion};
  std::string part_id;
  int revision = 0;
  std::vector<MappingRecord> mappings;
  std::vector<UnmappedEntity> unmapped_entities;
  std::vector<std::string> unconstrained_features;
  std::vector<std::string> entity_ids;  // every entity of the part, for exhaustiveness checks
  std::vector<std::string> feature_ids;
  std::optional<Approval> approval;
  PipelineConfig config_snapshot;

  std::size_t count(MappingStatus s) const {
    std::size_t n = 0;
    for (const auto& m : mappings) n += (m.status == s);
    return n;
  }

  friend bool operator==(const UnifiedSpec&, const UnifiedSpec&) = default;
};

/// Every entity appears in some mapping record or in the unmapped list.
inline std::vector<std::string> exhaustiveness_violations(const UnifiedSpec& spec) {
  std::set<std::string> seen;
  for (const auto& m : spec.mappings) seen.insert(m.entity_id);
  for (const auto& u : spec.unmapped_entities) seen.insert(u.entity_id);
  std::vector<std::string> missing;
  for (const auto& e : spec.entity_ids) {
    if (!seen.count(e)) missing.push_back(e);
  }
  return missing;
}

// ---------------------------------------------------------------------------
// Digest

/// 64-bit FNV-1a, hex encoded. Used for provenance payloads and replay keys.
inline std::string digest_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Input validation

enum class Severity { warning, fatal };

struct ValidationIssue {
  Severity severity = Severity::fatal;
  std::string code;
  std::string subject;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::vector<DrawingEntity> normalized_entities;  // units filled in / converted

  bool empty() const { return issues.empty(); }
  bool admissible() const {
    for (const auto& i : issues) {
      if (i.severity == Severity::fatal) return false;
    }
    return true;
  }
};

/// Convert a length or angle to mm / degrees. Returns nullopt for unknown units.
inline std::optional<std::pair<double, std::string>> normalize_unit(double value,
                                                                    std::string_view unit) {
  if (unit == "mm") return std::pair{value, std::string("mm")};
  if (unit == "cm") return std::pair{value * 10.0, std::string("mm")};
  if (unit == "m") return std::pair{value * 1000.0, std::string("mm")};
  if (unit == "in" || unit == "inch" || unit == "\"") return std::pair{value * 25.4, std::string("mm")};
  if (unit == "deg" || unit == "°") return std::pair{value, std::string("deg")};
  if (unit == "rad") return std::pair{value * 180.0 / 3.14159265358979323846, std::string("deg")};
  if (unit == "um" || unit == "µm") return std::pair{value, std::string("um")};
  return std::nullopt;
}

inline ValidationReport validate_part_inputs(const std::vector<Feature3D>& features,
                                             const std::vector<DrawingEntity>& entities) {
  ValidationReport report;
  auto fatal = [&](std::string code, std::string subject, std::string msg) {
    report.issues.push_back({Severity::fatal, std::move(code), std::move(subject), std::move(msg)});
  };
  auto warn = [&](std::string code, std::string subject, std::string msg) {
    report.issues.push_back({Severity::warning, std::move(code), std::move(subject), std::move(msg)});
  };

  std::set<std::string> feature_ids;
  for (const auto& f : features) {
    if (f.id.empty()) fatal("empty_id", "", "feature with empty id");
    if (!feature_ids.insert(f.id).second) fatal("duplicate_id", f.id, "duplicate feature id " + f.id);
    if (!(f.afr_confidence >= 0.0 && f.afr_confidence <= 1.0)) {
      fatal("confidence_range", f.id, "afr_confidence outside [0,1]");
    }
    for (const auto& [key, value] : f.params) {
      if (!std::isfinite(value)) {
        fatal("non_finite_param", f.id, "parameter " + key + " is not finite");
      } else if (value <= 0.0) {
        fatal("non_positive_param", f.id, "parameter " + key + " must be > 0");
      }
    }
    if (f.metadata.instance_count < 1) fatal("instance_count", f.id, "instance_count must be >= 1");
    if (f.feature_type.kind() == FeatureKind::other && f.feature_type.label().empty()) {
      fatal("empty_label", f.id, "other feature type needs a label");
    }
  }

  std::set<std::string> entity_ids;
  for (const auto& e : entities) {
    DrawingEntity norm = e;
    if (e.id.empty()) fatal("empty_id", "", "entity with empty id");
    if (!entity_ids.insert(e.id).second) fatal("duplicate_id", e.id, "duplicate entity id " + e.id);
    if (e.raw_text.empty()) fatal("empty_text", e.id, "raw_text must be non-empty");
    if (auto v = e.number("value")) {
      if (!std::isfinite(*v)) {
        fatal("non_finite_value", e.id, "value is not finite");
      } else {
        auto unit = e.text("unit");
        if (!unit) {
          warn("missing_unit", e.id, "value without unit; assuming mm");
          norm.semantic_values["unit"] = std::string("mm");
        } else if (auto conv = normalize_unit(*v, *unit)) {
          norm.semantic_values["value"] = conv->first;
          norm.semantic_values["unit"] = conv->second;
        } else {
          fatal("unknown_unit", e.id, "unknown unit " + *unit);
        }
      }
    }
    report.normalized_entities.push_back(std::move(norm));
  }
  return report;
}

}  // namespace drawmap
