#pragma once
// Config file for a mapping run. Either a bare pipeline config object, or
//   {"pipeline": {...}, "enricher": {...}, "escalation": {...}}
// where enricher = {kind, endpoint, credential_env, timeout_ms, replay_path}
// and escalation = {endpoint, credential_env, timeout_ms}.

#include <string>

#include "drawmap/enricher.hpp"
#include "drawmap/scoring.hpp"
#include "drawmap/serialization.hpp"

namespace drawmap {

struct RemoteEndpoint {
  std::string endpoint;
  std::string credential_env = "DRAWMAP_API_KEY";
  int timeout_ms = 30000;
};

struct RunConfig {
  PipelineConfig pipeline;
  EnricherBackend enricher;
  RemoteEndpoint escalation;
};

inline void from_json(const Json& j, EnricherBackend& b) {
  if (!j.is_object()) throw FormatError("enricher must be an object");
  const std::string kind = j.value("kind", std::string("rule_based"));
  if (kind == "rule_based") {
    b.kind = EnricherKind::rule_based;
  } else if (kind == "external_vlm") {
    b.kind = EnricherKind::external_vlm;
  } else if (kind == "replay") {
    b.kind = EnricherKind::replay;
  } else {
    throw FormatError("unknown enricher kind '" + kind + "'");
  }
  b.endpoint = j.value("endpoint", b.endpoint);
  b.credential_env = j.value("credential_env", b.credential_env);
  b.timeout_ms = j.value("timeout_ms", b.timeout_ms);
  b.replay_path = j.value("replay_path", b.replay_path);
}

inline void from_json(const Json& j, RemoteEndpoint& r) {
  if (!j.is_object()) throw FormatError("escalation must be an object");
  r.endpoint = j.value("endpoint", r.endpoint);
  r.credential_env = j.value("credential_env", r.credential_env);
  r.timeout_ms = j.value("timeout_ms", r.timeout_ms);
}

inline void from_json(const Json& j, RunConfig& c) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  const bool sectioned = j.contains("pipeline") || j.contains("enricher") || j.contains("escalation");
  if (!sectioned) {
    from_json(j, c.pipeline);
    return;
  }
  if (j.contains("pipeline")) from_json(j.at("pipeline"), c.pipeline);
  if (j.contains("enricher")) from_json(j.at("enricher"), c.enricher);
  if (j.contains("escalation")) from_json(j.at("escalation"), c.escalation);
}

inline RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return {};
  return load_json_file<RunConfig>(path);
}

inline CompatibilityTable load_compatibility(const std::string& path) {
  if (path.empty()) return CompatibilityTable::defaults();
  const Json j = parse_json_text(read_text_file(path), path);
  try {
    return compatibility_from_json(j);
  } catch (const Json::exception& err) {
    throw FormatError(path + ": " + err.what());
  }
}

inline Json validation_report_json(const ValidationReport& r) {
  Json issues = Json::array();
  for (const auto& i : r.issues) {
    issues.push_back(Json{{"severity", i.severity == Severity::fatal ? "fatal" : "warning"},
                          {"code", i.code},
                          {"subject", i.subject},
                          {"message", i.message}});
  }
  return Json{{"admissible", r.admissible()}, {"issues", issues}};
}

}  // namespace drawmap
