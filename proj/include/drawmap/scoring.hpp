#pragma once
// Composite correspondence scoring.
//
//   S = 0                                          if S_type = 0
//   S = (w_t*S_type + w_d*S_dim + w_c*S_ctx + h) * prod(factors)   otherwise
//
// S_type in {0, 0.9, 1.0} from the compatibility table, S_dim in {0, 0.7, 1.0}
// from a stepped tolerance on the routed parameter, S_ctx either neutral or
// the enrichment confidence. The mismatch factor 0.3 applies whenever a 2D
// dimension exists but S_dim = 0, after every additive term.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "drawmap/core.hpp"
#include "drawmap/serialization.hpp"

namespace drawmap {

// ---------------------------------------------------------------------------
// Type compatibility

struct CompatibilityTable {
  std::set<std::pair<std::string, std::string>> omega_exact;  // (feature_type, target_category)
  std::vector<std::set<std::string>> omega_semantic;

  static CompatibilityTable defaults() {
    CompatibilityTable t;
    for (const auto& [kind, name] : kFeatureKindNames) {
      if (kind != FeatureKind::other) t.omega_exact.emplace(std::string(name), std::string(name));
    }
    t.omega_exact.emplace("thread_hole", "hole");
    t.omega_exact.emplace("boss", "cylinder");
    t.omega_exact.emplace("cylinder", "boss");
    t.omega_semantic = {{"hole", "bore", "drill"}, {"slot", "pocket", "groove"}, {"fillet", "round", "radius"}};
    return t;
  }

  /// A type participates in scoring only if some table entry names it.
  bool knows(const std::string& type) const {
    for (const auto& [f, c] : omega_exact) {
      if (f == type || c == type) return true;
    }
    for (const auto& g : omega_semantic) {
      if (g.count(type)) return true;
    }
    return false;
  }

  bool exact(const std::string& feature_type, const std::string& category) const {
    if (omega_exact.count({feature_type, category})) return true;
    // labels listed anywhere in the table are compatible with themselves
    return feature_type == category && knows(feature_type);
  }

  bool semantic(const std::string& feature_type, const std::string& category) const {
    for (const auto& g : omega_semantic) {
      if (g.count(feature_type) && g.count(category)) return true;
    }
    return false;
  }
};

inline void to_json(Json& j, const CompatibilityTable& t) {
  Json exact = Json::array();
  for (const auto& [f, c] : t.omega_exact) exact.push_back(Json::array({f, c}));
  j = Json{{"exact", exact}, {"semantic", t.omega_semantic}};
}

/// Override file: {"exact": [[f, c], ...], "semantic": [[...], ...], "replace": bool}.
/// Entries extend the defaults unless "replace" is true.
inline CompatibilityTable compatibility_from_json(const Json& j) {
  CompatibilityTable t = j.value("replace", false) ? CompatibilityTable{} : CompatibilityTable::defaults();
  for (const auto& pair : j.value("exact", Json::array())) {
    if (!pair.is_array() || pair.size() != 2) throw FormatError("compatibility exact entry must be [feature, category]");
    t.omega_exact.emplace(pair[0].get<std::string>(), pair[1].get<std::string>());
  }
  for (const auto& group : j.value("semantic", Json::array())) {
    t.omega_semantic.push_back(group.get<std::set<std::string>>());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Feature families used by the heuristics

inline bool in_hole_group(const FeatureType& t) {
  switch (t.kind()) {
    case FeatureKind::hole:
    case FeatureKind::bore:
    case FeatureKind::drill:
    case FeatureKind::thread_hole:
      return true;
    default:
      return false;
  }
}

inline bool is_cylindrical(const FeatureType& t) {
  return in_hole_group(t) || t.kind() == FeatureKind::boss || t.kind() == FeatureKind::cylinder;
}

inline bool is_planar(const FeatureType& t) { return t.kind() == FeatureKind::plane; }

// ---------------------------------------------------------------------------
// Components

struct TypeScore {
  double value = 0.0;
  std::string reason;
};

inline constexpr double kTypeExact = 1.0;
inline constexpr double kTypeSemantic = 0.9;

/// Category a descriptor targets; "*" stands for any scorable feature type.
inline std::optional<std::string> effective_category(const EnrichedDescriptor& d) {
  if (d.target_category) return d.target_category;
  if (auto c = default_target_category(d.normalized_type)) return c;
  if (d.normalized_type == NormalizedType::unknown) return std::nullopt;
  return std::string("*");
}

inline TypeScore score_type(const Feature3D& feature, const EnrichedDescriptor& desc, const CompatibilityTable& table) {
  const std::string ft = feature.feature_type.name();
  const auto category = effective_category(desc);
  if (!category) return {0.0, "no target category for " + std::string(to_string(desc.normalized_type))};
  if (*category == "*") {
    if (table.knows(ft)) return {kTypeSemantic, "untargeted " + std::string(to_string(desc.normalized_type)) + " ~ " + ft};
    return {0.0, "feature type " + ft + " not in compatibility table"};
  }
  if (table.exact(ft, *category)) return {kTypeExact, "exact " + ft + " = " + *category};
  if (table.semantic(ft, *category)) return {kTypeSemantic, "semantic group " + ft + " ~ " + *category};
  return {0.0, "incompatible " + ft + " / " + *category};
}

struct RoutedPair {
  double x2d = 0.0;
  double x3d = 0.0;
  std::string param;  // which 3D parameter was used, e.g. "diameter" or "diameter/2"
};

namespace scoring_detail {

inline std::optional<RoutedPair> closest(double x2d, const std::vector<std::pair<std::string, double>>& options) {
  std::optional<RoutedPair> best;
  for (const auto& [name, x3d] : options) {
    if (!best || std::abs(x2d - x3d) < std::abs(best->x2d - best->x3d)) best = RoutedPair{x2d, x3d, name};
  }
  return best;
}

}  // namespace scoring_detail

/// Pick the 3D value a 2D dimension is compared against. With routing off the
/// dimension is compared against every scalar parameter and the closest wins.
inline std::optional<RoutedPair> route_dimension(const EnrichedDescriptor& desc, const Feature3D& feature,
                                                 bool semantic_routing = true) {
  if (!desc.numeric_value || !is_dimensional(desc.normalized_type)) return std::nullopt;
  const double x = *desc.numeric_value;
  std::vector<std::pair<std::string, double>> options;
  auto add = [&](const char* key) {
    if (auto v = feature.param(key)) options.emplace_back(key, *v);
  };

  if (!semantic_routing) {
    for (const auto& [key, v] : feature.params) options.emplace_back(key, v);
    return scoring_detail::closest(x, options);
  }

  switch (desc.normalized_type) {
    case NormalizedType::diameter:
    case NormalizedType::thread:
      add("diameter");
      break;
    case NormalizedType::radius:
      add("radius");
      if (auto d = feature.param("diameter")) options.emplace_back("diameter/2", *d / 2.0);
      break;
    case NormalizedType::depth:
      add("depth");
      break;
    case NormalizedType::linear:
      add("width");
      add("length");
      break;
    case NormalizedType::angle:
      add("angle");
      break;
    case NormalizedType::counterbore:
      add("counterbore_diameter");
      break;
    case NormalizedType::countersink:
      add("countersink_diameter");
      break;
    default:
      break;
  }
  return scoring_detail::closest(x, options);
}

struct DimScore {
  double value = 0.0;
  bool numeric_mismatch = false;
};

inline constexpr double kDimExact = 1.0;
inline constexpr double kDimNear = 0.7;
// Absorbs binary representation error at the inclusive band edges (1 nm).
inline constexpr double kBandSlack = 1e-9;

/// Stepped tolerance score. `has_numeric_2d` says whether the drawing side
/// carries a dimension at all; a dimension with nothing to compare against is
/// a mismatch.
inline DimScore score_dim(const std::optional<RoutedPair>& pair, bool has_numeric_2d, double epsilon) {
  if (!pair) return {0.0, has_numeric_2d};
  const double delta = std::abs(pair->x2d - pair->x3d);
  if (delta <= epsilon + kBandSlack) return {kDimExact, false};
  if (delta <= 2.0 * epsilon + kBandSlack) return {kDimNear, false};
  return {0.0, true};
}

inline double score_context(const EnrichedDescriptor& desc, bool spatial_cues_available, double neutral = 0.5) {
  return spatial_cues_available ? desc.enrich_confidence : neutral;
}

struct HeuristicResult {
  double h_adjust = 0.0;
  std::vector<std::pair<std::string, double>> factors;
  bool force_type_zero = false;
  std::vector<TraceStep> trace;
};

/// Engineering rules layered on the base components.
inline HeuristicResult apply_heuristics(const Feature3D& feature, const EnrichedDescriptor& desc,
                                        const PipelineConfig& cfg) {
  HeuristicResult r;
  if (!cfg.heuristics_enabled) return r;
  const FeatureType& ft = feature.feature_type;
  const NormalizedType nt = desc.normalized_type;

  auto bonus = [&](const char* label, double v, std::string detail) {
    r.h_adjust += v;
    r.trace.push_back({"term", label, v, std::move(detail)});
  };

  if (nt == NormalizedType::thread && !is_cylindrical(ft)) {
    r.force_type_zero = true;
    r.trace.push_back({"gate", "thread_restriction", 0.0, "thread callouts apply to cylindrical features only"});
    return r;
  }
  if (in_hole_group(ft) && desc.has_diameter_symbol) {
    bonus("h:diameter_symbol", cfg.diameter_symbol_bonus, "diameter symbol on hole-type feature");
  }
  if (nt == NormalizedType::diameter && !desc.has_diameter_symbol && in_hole_group(ft)) {
    r.factors.emplace_back("missing_diameter_symbol", cfg.missing_symbol_penalty);
  }
  if ((nt == NormalizedType::gdt_position || nt == NormalizedType::gdt_profile) &&
      (in_hole_group(ft) || ft.kind() == FeatureKind::pocket)) {
    bonus("h:gdt_prior", cfg.gdt_prior_bonus, "position/profile prefers holes and pockets");
  }
  if (nt == NormalizedType::gdt_runout && is_cylindrical(ft)) {
    bonus("h:gdt_prior", cfg.gdt_prior_bonus, "runout prefers cylindrical features");
  }
  if (nt == NormalizedType::datum_ref && (is_planar(ft) || is_cylindrical(ft))) {
    bonus("h:datum_prior", cfg.gdt_prior_bonus, "datums prefer planar or cylindrical features");
  }
  if (r.h_adjust > cfg.heuristic_cap) {
    const double cut = cfg.heuristic_cap - r.h_adjust;
    r.h_adjust = cfg.heuristic_cap;
    r.trace.push_back({"term", "h:cap", cut, "heuristic total capped"});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Composite

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline ScoredCandidate score_pair(const Feature3D& feature, const EnrichedDescriptor& desc, bool spatial_cues,
                                  const PipelineConfig& cfg, const CompatibilityTable& table) {
  ScoredCandidate c;
  c.feature_id = feature.id;
  c.entity_id = desc.entity_id;

  const TypeScore type = score_type(feature, desc, table);
  c.s_type = type.value;
  c.trace.push_back({"component", "s_type", c.s_type, type.reason});

  const HeuristicResult heur = apply_heuristics(feature, desc, cfg);
  if (heur.force_type_zero && c.s_type > 0.0) {
    c.s_type = 0.0;
    c.trace.insert(c.trace.end(), heur.trace.begin(), heur.trace.end());
  }
  if (c.s_type == 0.0) {
    c.trace.push_back({"gate", "type_gate", 0.0, "type-incompatible pair rejected"});
    c.trace.push_back({"final", "s_final", 0.0, ""});
    return c;
  }

  const bool has_numeric = desc.numeric_value.has_value() && is_dimensional(desc.normalized_type);
  const auto routed = route_dimension(desc, feature, cfg.semantic_routing_enabled);
  const DimScore dim = score_dim(routed, has_numeric, cfg.epsilon_mm);
  c.s_dim = dim.value;
  c.numeric_mismatch = dim.numeric_mismatch;
  std::string dim_detail;
  if (routed) {
    dim_detail = format_number(routed->x2d) + " vs " + routed->param + "=" + format_number(routed->x3d);
  } else {
    dim_detail = has_numeric ? "no routable parameter" : "no numeric value";
  }
  c.trace.push_back({"component", "s_dim", c.s_dim, dim_detail});

  c.s_ctx = score_context(desc, spatial_cues, cfg.neutral_context);
  c.trace.push_back({"component", "s_ctx", c.s_ctx, spatial_cues ? "enrichment confidence" : "no spatial cues"});

  const double w_c = cfg.context_enabled ? cfg.w_c : 0.0;
  c.trace.push_back({"term", "w_t*s_type", cfg.w_t * c.s_type, ""});
  c.trace.push_back({"term", "w_d*s_dim", cfg.w_d * c.s_dim, ""});
  c.trace.push_back({"term", "w_c*s_ctx", w_c * c.s_ctx, cfg.context_enabled ? "" : "context disabled"});

  c.h_adjust = heur.h_adjust;
  for (const auto& step : heur.trace) c.trace.push_back(step);

  double score = cfg.w_t * c.s_type + cfg.w_d * c.s_dim + w_c * c.s_ctx + c.h_adjust;
  c.trace.push_back({"subtotal", "pre_factor_sum", score, ""});

  if (c.numeric_mismatch) c.multiplicative_factors.emplace_back("numeric_mismatch", cfg.mismatch_factor);
  for (const auto& f : heur.factors) c.multiplicative_factors.push_back(f);
  for (const auto& [label, f] : c.multiplicative_factors) {
    score *= f;
    c.trace.push_back({"factor", label, f, ""});
  }
  c.s_final = score;
  c.trace.push_back({"final", "s_final", score, ""});
  return c;
}

/// Recompute s_final from the trace alone: sum of terms times product of factors.
inline double replay_trace(const std::vector<TraceStep>& trace) {
  double sum = 0.0;
  double product = 1.0;
  bool gated = false;
  for (const auto& s : trace) {
    if (s.kind == "term") sum += s.value;
    if (s.kind == "factor") product *= s.value;
    if (s.kind == "gate") gated = true;
  }
  return gated ? 0.0 : sum * product;
}

/// Score every (feature, entity) pair. Output is feature-major in input order.
inline std::vector<ScoredCandidate> score_all(const std::vector<Feature3D>& features,
                                              const std::vector<DrawingEntity>& entities,
                                              const std::vector<EnrichedDescriptor>& descriptors,
                                              const PipelineConfig& cfg, const CompatibilityTable& table) {
  std::vector<ScoredCandidate> out;
  out.reserve(features.size() * entities.size());
  for (const auto& f : features) {
    for (std::size_t j = 0; j < entities.size(); ++j) {
      out.push_back(score_pair(f, descriptors.at(j), entities[j].has_spatial_cues(), cfg, table));
    }
  }
  return out;
}

}  // namespace drawmap
