#pragma once
// Two-stage escalation for links the scorer cannot settle on its own:
// multimodal candidate selection first, then a constrained reasoning stage.
// Both stages speak the same wire schema:
//
//   request  {stage, entity, descriptor, drawing_region, candidates[{feature, s_final}], validation_error?}
//   response {decision: "map"|"reject", target_feature_id?, confidence, rationale}
//
// A response that fails validation is retried once with the validator message
// echoed back; a second failure counts as a rejection.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drawmap/core.hpp"
#include "drawmap/serialization.hpp"
#include "drawmap/transport.hpp"

namespace drawmap {

enum class EscalationStage { multimodal, constrained_llm };

inline std::string_view to_string(EscalationStage s) {
  return s == EscalationStage::multimodal ? "multimodal" : "constrained_llm";
}

struct EscalationCandidate {
  Feature3D feature;
  double s_final = 0.0;
};

struct EscalationRequest {
  EscalationStage stage = EscalationStage::multimodal;
  DrawingEntity entity;
  EnrichedDescriptor descriptor;
  std::optional<std::string> drawing_region;  // image reference; absent means text context only
  std::vector<EscalationCandidate> candidates;  // s_final descending
  std::optional<std::string> validation_error;  // echo of the previous attempt's problem
};

inline Json feature_summary(const Feature3D& f) {
  Json j{{"id", f.id}, {"feature_type", f.feature_type.name()}, {"params", f.params}};
  if (f.metadata.pattern_id) j["pattern_id"] = *f.metadata.pattern_id;
  if (f.metadata.instance_count != 1) j["instance_count"] = f.metadata.instance_count;
  return j;
}

inline void to_json(Json& j, const EscalationRequest& r) {
  Json cands = Json::array();
  for (const auto& c : r.candidates) cands.push_back(Json{{"feature", feature_summary(c.feature)}, {"s_final", c.s_final}});
  j = Json{{"stage", to_string(r.stage)},
           {"entity", r.entity},
           {"descriptor", r.descriptor},
           {"drawing_region", r.drawing_region ? Json(*r.drawing_region) : Json(nullptr)},
           {"candidates", cands}};
  if (r.validation_error) j["validation_error"] = *r.validation_error;
}

inline std::string request_digest(const EscalationRequest& r) { return digest_hex(Json(r).dump()); }

enum class Decision { map, reject };

struct EscalationResponse {
  Decision decision = Decision::reject;
  std::optional<std::string> target_feature_id;
  double confidence = 0.0;
  std::string rationale;
  friend bool operator==(const EscalationResponse&, const EscalationResponse&) = default;
};

inline void to_json(Json& j, const EscalationResponse& r) {
  j = Json{{"decision", r.decision == Decision::map ? "map" : "reject"},
           {"confidence", r.confidence},
           {"rationale", r.rationale}};
  if (r.target_feature_id) j["target_feature_id"] = *r.target_feature_id;
}

struct ValidatedResponse {
  std::optional<EscalationResponse> response;
  std::string error;  // set when response is empty
};

/// Strict schema check of a raw reply against the request it answers.
inline ValidatedResponse validate_escalation_response(const std::string& raw, const EscalationRequest& req) {
  auto fail = [](std::string why) { return ValidatedResponse{std::nullopt, std::move(why)}; };
  Json j;
  try {
    j = Json::parse(raw);
  } catch (const Json::exception&) {
    return fail("response is not valid JSON");
  }
  if (!j.is_object()) return fail("response must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "decision" && key != "target_feature_id" && key != "confidence" && key != "rationale") {
      return fail("unexpected field '" + key + "'");
    }
  }

  EscalationResponse r;
  if (!j.contains("decision") || !j["decision"].is_string()) return fail("'decision' must be a string");
  const std::string decision = j["decision"].get<std::string>();
  if (decision == "map") {
    r.decision = Decision::map;
  } else if (decision == "reject") {
    r.decision = Decision::reject;
  } else {
    return fail("'decision' must be \"map\" or \"reject\"");
  }

  if (!j.contains("confidence") || !j["confidence"].is_number()) return fail("'confidence' must be a number");
  r.confidence = j["confidence"].get<double>();
  if (!std::isfinite(r.confidence) || r.confidence < 0.0 || r.confidence > 1.0) {
    return fail("'confidence' must lie in [0, 1]");
  }

  if (!j.contains("rationale") || !j["rationale"].is_string()) return fail("'rationale' must be a string");
  r.rationale = j["rationale"].get<std::string>();

  const bool has_target = j.contains("target_feature_id") && !j["target_feature_id"].is_null();
  if (r.decision == Decision::map) {
    if (!has_target || !j["target_feature_id"].is_string()) return fail("'map' requires a string target_feature_id");
    const std::string target = j["target_feature_id"].get<std::string>();
    const bool listed = std::any_of(req.candidates.begin(), req.candidates.end(),
                                    [&](const EscalationCandidate& c) { return c.feature.id == target; });
    if (!listed) return fail("target_feature_id '" + target + "' is not among the candidates");
    r.target_feature_id = target;
  } else if (has_target) {
    return fail("'reject' must not carry a target_feature_id");
  }
  return {r, ""};
}

// ---------------------------------------------------------------------------
// Clients

/// Implementations must be safe to call from several threads at once.
class EscalationClient {
 public:
  virtual ~EscalationClient() = default;
  virtual TransportReply complete(const EscalationRequest& request) const = 0;
};

/// Sends the request as JSON over any transport (HTTP in production).
class TransportEscalationClient final : public EscalationClient {
 public:
  explicit TransportEscalationClient(std::shared_ptr<JsonTransport> transport) : transport_(std::move(transport)) {}
  TransportReply complete(const EscalationRequest& request) const override {
    return transport_->post(Json(request).dump());
  }

 private:
  std::shared_ptr<JsonTransport> transport_;
};

namespace escalation_detail {
inline TransportReply reply(const EscalationResponse& r) { return {true, Json(r).dump(), "", false}; }
}  // namespace escalation_detail

/// Answers from a ground-truth link set: maps to the best-ranked candidate
/// that truly belongs to the entity, otherwise rejects.
class OracleClient final : public EscalationClient {
 public:
  explicit OracleClient(GroundTruth truth) : truth_(std::move(truth)) {}
  TransportReply complete(const EscalationRequest& req) const override {
    for (const auto& c : req.candidates) {
      if (truth_.links.count({c.feature.id, req.entity.id})) {
        return escalation_detail::reply({Decision::map, c.feature.id, 1.0, "oracle"});
      }
    }
    return escalation_detail::reply({Decision::reject, std::nullopt, 1.0, "oracle: no ground-truth candidate"});
  }

 private:
  GroundTruth truth_;
};

class FirstCandidateClient final : public EscalationClient {
 public:
  TransportReply complete(const EscalationRequest& req) const override {
    if (req.candidates.empty()) return escalation_detail::reply({Decision::reject, std::nullopt, 1.0, "no candidates"});
    const auto& top = req.candidates.front();
    return escalation_detail::reply(
        {Decision::map, top.feature.id, std::clamp(top.s_final, 0.0, 1.0), "first candidate"});
  }
};

class AlwaysRejectClient final : public EscalationClient {
 public:
  TransportReply complete(const EscalationRequest&) const override {
    return escalation_detail::reply({Decision::reject, std::nullopt, 1.0, "policy"});
  }
};

/// Replays recorded responses keyed by request digest. Each line of the file
/// is {"digest": "...", "response": <object or raw string>}.
class ScriptedClient final : public EscalationClient {
 public:
  explicit ScriptedClient(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path + ": cannot open script");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const Json j = parse_json_text(line, path + ":" + std::to_string(lineno));
      if (!j.is_object() || !j.contains("digest") || !j.contains("response")) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": expected {digest, response}");
      }
      const Json& r = j["response"];
      script_[j["digest"].get<std::string>()] = r.is_string() ? r.get<std::string>() : r.dump();
    }
  }
  explicit ScriptedClient(std::map<std::string, std::string> script) : script_(std::move(script)) {}

  TransportReply complete(const EscalationRequest& req) const override {
    auto it = script_.find(request_digest(req));
    if (it == script_.end()) return escalation_detail::reply({Decision::reject, std::nullopt, 1.0, "unscripted"});
    return {true, it->second, "", false};
  }

 private:
  std::map<std::string, std::string> script_;
};

/// Policy names accepted by make_mock_client.
inline constexpr std::string_view kMockPolicies[] = {"oracle", "first_candidate", "always_reject", "scripted"};

inline std::unique_ptr<EscalationClient> make_mock_client(const std::string& policy,
                                                          const std::optional<GroundTruth>& truth = std::nullopt,
                                                          const std::string& script_path = "") {
  if (policy == "oracle") {
    if (!truth) throw FormatError("oracle policy needs a ground-truth file");
    return std::make_unique<OracleClient>(*truth);
  }
  if (policy == "first_candidate") return std::make_unique<FirstCandidateClient>();
  if (policy == "always_reject") return std::make_unique<AlwaysRejectClient>();
  if (policy == "scripted") {
    if (script_path.empty()) throw FormatError("scripted policy needs a script file");
    return std::make_unique<ScriptedClient>(script_path);
  }
  throw FormatError("unknown escalation policy '" + policy + "'");
}

// ---------------------------------------------------------------------------
// Protocol

struct EscalationAttempt {
  EscalationStage stage = EscalationStage::multimodal;
  int attempt = 0;  // 0 = first try, 1 = retry
  std::string request_digest;
  std::string raw;  // reply body, or transport error text
  bool transport_failed = false;
  std::optional<std::string> validation_error;
};

enum class EscalationResult { mapped, rejected, transport_error, disabled };

struct EscalationOutcome {
  EscalationResult result = EscalationResult::disabled;
  std::optional<EscalationStage> resolved_by;
  std::optional<EscalationResponse> response;  // the deciding valid response, if any
  std::vector<EscalationAttempt> attempts;
  std::string reason;
};

/// Run the enabled stages in order. The multimodal stage's map ends the
/// protocol; a reject or two invalid replies hand over to the next stage.
inline EscalationOutcome escalate(EscalationRequest request, const EscalationClient& client,
                                  const PipelineConfig& cfg) {
  EscalationOutcome out;
  std::vector<EscalationStage> stages;
  if (cfg.vlm_selection_enabled) stages.push_back(EscalationStage::multimodal);
  if (cfg.llm_escalation_enabled) stages.push_back(EscalationStage::constrained_llm);
  if (stages.empty()) {
    out.reason = "escalation disabled";
    return out;
  }
  if (request.candidates.empty()) {
    out.result = EscalationResult::rejected;
    out.reason = "no candidates";
    return out;
  }

  out.result = EscalationResult::rejected;
  for (const EscalationStage stage : stages) {
    request.stage = stage;
    request.validation_error.reset();
    for (int attempt = 0; attempt <= cfg.escalation_retries; ++attempt) {
      EscalationAttempt rec;
      rec.stage = stage;
      rec.attempt = attempt;
      rec.request_digest = request_digest(request);
      const TransportReply reply = client.complete(request);
      if (!reply.ok) {
        rec.transport_failed = true;
        rec.raw = reply.timed_out ? "timeout" : reply.error;
        out.attempts.push_back(std::move(rec));
        out.result = EscalationResult::transport_error;
        out.reason = std::string(to_string(stage)) + " transport failure: " + out.attempts.back().raw;
        return out;
      }
      rec.raw = reply.body;
      ValidatedResponse v = validate_escalation_response(reply.body, request);
      if (!v.response) {
        rec.validation_error = v.error;
        out.attempts.push_back(std::move(rec));
        request.validation_error = v.error;
        out.reason = std::string(to_string(stage)) + " invalid response: " + v.error;
        continue;
      }
      out.attempts.push_back(std::move(rec));
      if (v.response->decision == Decision::map) {
        out.result = EscalationResult::mapped;
        out.resolved_by = stage;
        out.response = v.response;
        out.reason.clear();
        return out;
      }
      out.response = v.response;
      out.reason = std::string(to_string(stage)) + " rejected: " + v.response->rationale;
      break;
    }
  }
  return out;
}

}  // namespace drawmap
