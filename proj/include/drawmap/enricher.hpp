#pragma once
// Semantic enrichment: DrawingEntity -> EnrichedDescriptor.
//
// The rule-based backend is the default and is a pure function of the entity.
// The external backend posts {raw_text, bbox, image_ref} to a vision-language
// service and falls back to the rule-based result on any failure. The replay
// backend answers from a recorded newline-delimited JSON file.

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "drawmap/callout_grammar.hpp"
#include "drawmap/core.hpp"
#include "drawmap/serialization.hpp"
#include "drawmap/transport.hpp"

namespace drawmap {

enum class EnricherKind { rule_based, external_vlm, replay };

struct EnricherBackend {
  EnricherKind kind = EnricherKind::rule_based;
  std::string endpoint;         // external_vlm
  std::string credential_env;   // name of the env var holding the API key
  int timeout_ms = 30000;
  std::string replay_path;      // replay
};

/// Wire request sent to an external enrichment service.
inline Json enrichment_request(const DrawingEntity& e) {
  Json req{{"entity_id", e.id}, {"raw_text", e.raw_text}, {"entity_type", to_string(e.entity_type)}};
  req["bbox"] = e.context.bbox ? Json(*e.context.bbox) : Json(nullptr);
  if (e.context.image_ref) req["image_ref"] = *e.context.image_ref;
  return req;
}

inline std::string enrichment_request_digest(const DrawingEntity& e) {
  return digest_hex(enrichment_request(e).dump());
}

/// Deterministic enrichment from the callout grammar plus upstream semantic values.
inline EnrichedDescriptor enrich_rule_based(const DrawingEntity& entity, const PipelineConfig& cfg = {}) {
  const CalloutParse parsed = parse_callout_grammar(entity.raw_text);

  EnrichedDescriptor d;
  d.entity_id = entity.id;
  d.normalized_type = parsed.kind;
  d.has_diameter_symbol = parsed.has_diameter_symbol;
  d.multiplicity = parsed.multiplicity;
  d.tolerance = parsed.tolerance;
  d.pitch = parsed.pitch;
  d.secondary_depth = parsed.depth;
  d.datums = parsed.datums;
  MatchQuality quality = parsed.quality;

  // Upstream-parsed kind refines a bare number ("10" typed as a diameter).
  if (auto kind = entity.text("dim_kind")) {
    if (auto t = parse_NormalizedType(*kind)) {
      if (d.normalized_type == NormalizedType::unknown || d.normalized_type == NormalizedType::linear) {
        // The kind came from upstream, not from the callout text.
        if (*t != d.normalized_type) quality = std::min(quality, MatchQuality::partial);
        d.normalized_type = *t;
      }
    }
  }
  if (d.normalized_type == NormalizedType::unknown) {
    if (entity.entity_type == EntityType::datum && !d.datums.empty()) d.normalized_type = NormalizedType::datum_ref;
  }

  std::optional<double> value = parsed.value;
  std::string unit = parsed.unit.value_or("");
  if (!value) {
    value = entity.number("value");
    if (value && quality == MatchQuality::none && d.normalized_type != NormalizedType::unknown) {
      quality = MatchQuality::partial;
    }
  }
  if (unit.empty()) unit = entity.text("unit").value_or(d.normalized_type == NormalizedType::angle ? "deg" : "mm");
  if (value) {
    if (auto conv = normalize_unit(*value, unit)) {
      d.numeric_value = conv->first;
      d.unit = conv->second;
      if (d.tolerance && conv->second == "mm" && unit != "mm") d.tolerance = normalize_unit(*d.tolerance, unit)->first;
    } else {
      d.numeric_value = value;
      d.unit = unit;
    }
  }
  if (d.normalized_type == NormalizedType::angle) d.unit = "deg";

  if (auto m = entity.number("multiplicity"); m && d.multiplicity == 1 && *m >= 1) {
    d.multiplicity = static_cast<int>(*m);
  }

  if (auto t = entity.text("target")) {
    d.target_category = *t;
  } else if (parsed.target_hint) {
    d.target_category = parsed.target_hint;
  } else {
    d.target_category = default_target_category(d.normalized_type);
  }

  switch (d.normalized_type == NormalizedType::unknown ? MatchQuality::none : quality) {
    case MatchQuality::exact: d.enrich_confidence = cfg.enrich_conf_exact; break;
    case MatchQuality::partial: d.enrich_confidence = cfg.enrich_conf_partial; break;
    case MatchQuality::none: d.enrich_confidence = cfg.enrich_conf_unknown; break;
  }
  d.source = "rule_based";
  return d;
}

/// Decode an external descriptor and check the invariants that scoring relies on.
/// Returns an error message on failure.
inline std::optional<std::string> decode_external_descriptor(const std::string& body, const DrawingEntity& entity,
                                                             EnrichedDescriptor& out) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception& err) {
    return std::string("malformed JSON: ") + err.what();
  }
  if (!j.is_object()) return std::string("descriptor must be an object");
  if (!j.contains("entity_id")) j["entity_id"] = entity.id;
  try {
    out = j.get<EnrichedDescriptor>();
  } catch (const std::exception& err) {
    return std::string(err.what());
  }
  if (out.entity_id != entity.id) return std::string("descriptor for a different entity");
  if (out.normalized_type == NormalizedType::thread && !out.numeric_value) {
    return std::string("thread descriptor without nominal diameter");
  }
  if (out.numeric_value && !std::isfinite(*out.numeric_value)) return std::string("non-finite value");
  return std::nullopt;
}

class Enricher {
 public:
  Enricher() = default;
  explicit Enricher(EnricherBackend backend, PipelineConfig cfg = {},
                    std::shared_ptr<JsonTransport> transport = nullptr)
      : backend_(std::move(backend)), cfg_(std::move(cfg)), transport_(std::move(transport)) {
    if (backend_.kind == EnricherKind::replay) load_replay();
  }

  const EnricherBackend& backend() const { return backend_; }

  EnrichedDescriptor enrich(const DrawingEntity& entity) const {
    switch (backend_.kind) {
      case EnricherKind::rule_based:
        return enrich_rule_based(entity, cfg_);
      case EnricherKind::replay: {
        auto it = replay_.find(enrichment_request_digest(entity));
        if (it == replay_.end()) return fallback(entity, "replay miss");
        EnrichedDescriptor d;
        if (auto err = decode_external_descriptor(it->second, entity, d)) return fallback(entity, *err);
        d.source = "replay";
        return d;
      }
      case EnricherKind::external_vlm: {
        if (!transport_) return fallback(entity, "no transport");
        const TransportReply reply = transport_->post(enrichment_request(entity).dump());
        if (!reply.ok) return fallback(entity, reply.timed_out ? "timeout" : reply.error);
        EnrichedDescriptor d;
        if (auto err = decode_external_descriptor(reply.body, entity, d)) return fallback(entity, *err);
        d.source = "external_vlm";
        return d;
      }
    }
    return enrich_rule_based(entity, cfg_);
  }

 private:
  EnricherBackend backend_;
  PipelineConfig cfg_;
  std::shared_ptr<JsonTransport> transport_;
  std::map<std::string, std::string> replay_;  // request digest -> descriptor JSON

  EnrichedDescriptor fallback(const DrawingEntity& entity, const std::string& why) const {
    EnrichedDescriptor d = enrich_rule_based(entity, cfg_);
    d.source = "rule_based_fallback: " + why;
    return d;
  }

  void load_replay() {
    std::ifstream in(backend_.replay_path);
    if (!in) throw FormatError(backend_.replay_path + ": cannot open replay file");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const Json j = parse_json_text(line, backend_.replay_path + ":" + std::to_string(lineno));
      if (!j.contains("digest") || !j.contains("response")) {
        throw FormatError(backend_.replay_path + ":" + std::to_string(lineno) + ": expected {digest, response}");
      }
      replay_[j.at("digest").get<std::string>()] = j.at("response").dump();
    }
  }
};

/// Enrich every entity once, in input order.
inline std::vector<EnrichedDescriptor> enrich_all(const std::vector<DrawingEntity>& entities, const Enricher& enricher) {
  std::vector<EnrichedDescriptor> out;
  out.reserve(entities.size());
  for (const auto& e : entities) out.push_back(enricher.enrich(e));
  return out;
}

}  // namespace drawmap
