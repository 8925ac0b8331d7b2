#pragma once
// Review service: a directory-backed store of spec versions and the HTTP API
// a reviewer drives.
//
//   GET  /api/specs                      summaries
//   GET  /api/specs/{id}                 latest document
//   POST /api/specs/{id}/decisions       {revision, mapping_id, action, target_feature_id?, rationale}
//                                        or {revision, decisions: [...]}
//                                        entity_id may stand in for mapping_id when
//                                        it names exactly one open record
//   POST /api/specs/{id}/approve         {revision, rationale?}
//
// The reviewer name comes from the X-Reviewer header (or a "reviewer" field).
// Every write names the revision it was based on; a stale revision is a 409.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "drawmap/clock.hpp"
#include "drawmap/core.hpp"
#include "drawmap/serialization.hpp"
#include "drawmap/spec_emitter.hpp"

namespace drawmap {

/// <root>/<id>/v0000.json, v0001.json, ... one file per revision, never rewritten.
class SpecStore {
 public:
  explicit SpecStore(std::string root) : root_(std::move(root)) { std::filesystem::create_directories(root_); }

  const std::string& root() const { return root_; }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
      if (entry.is_directory() && latest_revision(entry.path().filename().string())) {
        out.push_back(entry.path().filename().string());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::optional<int> latest_revision(const std::string& id) const {
    const auto dir = std::filesystem::path(root_) / id;
    if (!valid_id(id) || !std::filesystem::is_directory(dir)) return std::nullopt;
    std::optional<int> best;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() != 10 || name[0] != 'v' || entry.path().extension() != ".json") continue;
      try {
        const int rev = std::stoi(name.substr(1, 4));
        if (!best || rev > *best) best = rev;
      } catch (const std::exception&) {
      }
    }
    return best;
  }

  std::optional<UnifiedSpec> load(const std::string& id) const {
    const auto rev = latest_revision(id);
    if (!rev) return std::nullopt;
    return load_json_file<UnifiedSpec>(path_for(id, *rev));
  }

  std::vector<std::string> history(const std::string& id) const {
    std::vector<std::string> out;
    const auto rev = latest_revision(id);
    for (int r = 0; rev && r <= *rev; ++r) {
      if (std::filesystem::exists(path_for(id, r))) out.push_back(path_for(id, r));
    }
    return out;
  }

  /// Add a new document (or a new revision of an existing one).
  void publish(const std::string& id, const UnifiedSpec& spec) {
    if (!valid_id(id)) throw ReviewError(ReviewError::Kind::invalid, "invalid spec id '" + id + "'");
    std::lock_guard<std::mutex> lock(mutex_for(id));
    write_file_atomic(path_for(id, spec.revision), dump(Json(spec)));
  }

  /// Write `next` only if the stored revision still equals `expected`.
  void commit(const std::string& id, int expected, const UnifiedSpec& next) {
    std::lock_guard<std::mutex> lock(mutex_for(id));
    const auto current = latest_revision(id);
    if (!current || *current != expected) {
      throw ReviewError(ReviewError::Kind::conflict, "stale revision " + std::to_string(expected) +
                                                         (current ? ", current is " + std::to_string(*current) : ""));
    }
    write_file_atomic(path_for(id, next.revision), dump(Json(next)));
  }

  static bool valid_id(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
  }

 private:
  std::string root_;
  std::mutex table_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;

  std::mutex& mutex_for(const std::string& id) {
    std::lock_guard<std::mutex> lock(table_mutex_);
    auto& m = locks_[id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  std::string path_for(const std::string& id, int rev) const {
    std::ostringstream os;
    os << root_ << "/" << id << "/v" << std::setw(4) << std::setfill('0') << rev << ".json";
    return os.str();
  }
};

struct HttpResult {
  int status = 200;
  Json body;
};

inline Json spec_summary(const std::string& id, const UnifiedSpec& s) {
  Json j{{"id", id},
         {"part_id", s.part_id},
         {"revision", s.revision},
         {"accepted", s.count(MappingStatus::accepted)},
         {"human_edited", s.count(MappingStatus::human_edited)},
         {"flagged", s.count(MappingStatus::flagged)},
         {"rejected", s.count(MappingStatus::rejected)},
         {"unmapped", s.unmapped_entities.size()},
         {"unconstrained", s.unconstrained_features.size()}};
  j["approval"] = s.approval ? Json{{"reviewer", s.approval->reviewer}, {"timestamp", s.approval->timestamp}}
                             : Json(nullptr);
  return j;
}

/// Transport-free request handling; the httplib binding below only adapts it.
class ReviewService {
 public:
  ReviewService(SpecStore& store, const Clock& clock) : store_(store), clock_(clock) {}

  HttpResult list() const {
    Json out = Json::array();
    for (const auto& id : store_.ids()) {
      if (auto s = store_.load(id)) out.push_back(spec_summary(id, *s));
    }
    return {200, out};
  }

  HttpResult get(const std::string& id) const {
    auto s = store_.load(id);
    if (!s) return error(404, "not_found", "no spec '" + id + "'");
    return {200, Json(*s)};
  }

  HttpResult decide(const std::string& id, const std::string& body, const std::string& reviewer_header) {
    Json j;
    if (auto err = parse_body(body, j)) return *err;
    std::vector<PendingDecision> decisions;
    try {
      const std::string reviewer = reviewer_of(j, reviewer_header);
      if (j.contains("decisions")) {
        if (!j["decisions"].is_array()) return error(400, "invalid", "'decisions' must be an array");
        for (const auto& d : j["decisions"]) decisions.push_back(decision_from(d, reviewer));
      } else {
        decisions.push_back(decision_from(j, reviewer));
      }
    } catch (const ReviewError& e) {
      return from(e);
    }
    return apply(id, j, decisions);
  }

  HttpResult approve(const std::string& id, const std::string& body, const std::string& reviewer_header) {
    Json j;
    if (auto err = parse_body(body, j)) return *err;
    PendingDecision p;
    p.decision.action = ReviewAction::approve;
    try {
      p.decision.reviewer = reviewer_of(j, reviewer_header);
    } catch (const ReviewError& e) {
      return from(e);
    }
    if (j.contains("rationale") && j["rationale"].is_string()) p.decision.rationale = j["rationale"].get<std::string>();
    return apply(id, j, {p});
  }

 private:
  SpecStore& store_;
  const Clock& clock_;

  struct PendingDecision {
    ReviewDecision decision;
    std::string entity_id;  // resolved against the current document when mapping_id is absent
  };

  static HttpResult error(int status, const std::string& kind, const std::string& message) {
    return {status, Json{{"error", kind}, {"message", message}}};
  }

  static HttpResult from(const ReviewError& e) {
    switch (e.kind()) {
      case ReviewError::Kind::conflict: return error(409, "conflict", e.what());
      case ReviewError::Kind::refused: return error(422, "refused", e.what());
      case ReviewError::Kind::unknown_id: return error(422, "unknown_id", e.what());
      case ReviewError::Kind::invalid: break;
    }
    return error(400, "invalid", e.what());
  }

  static std::optional<HttpResult> parse_body(const std::string& body, Json& out) {
    try {
      out = Json::parse(body.empty() ? std::string("{}") : body);
    } catch (const Json::exception&) {
      return error(400, "invalid", "request body is not valid JSON");
    }
    if (!out.is_object()) return error(400, "invalid", "request body must be a JSON object");
    return std::nullopt;
  }

  static std::string reviewer_of(const Json& j, const std::string& header) {
    if (!header.empty()) return header;
    if (j.contains("reviewer") && j["reviewer"].is_string() && !j["reviewer"].get<std::string>().empty()) {
      return j["reviewer"].get<std::string>();
    }
    throw ReviewError(ReviewError::Kind::invalid, "reviewer is required (X-Reviewer header)");
  }

  static PendingDecision decision_from(const Json& j, const std::string& reviewer) {
    using Kind = ReviewError::Kind;
    if (!j.is_object()) throw ReviewError(Kind::invalid, "decision must be an object");
    PendingDecision p;
    ReviewDecision& d = p.decision;
    d.reviewer = reviewer;
    if (!j.contains("action") || !j["action"].is_string()) throw ReviewError(Kind::invalid, "'action' is required");
    const auto action = parse_ReviewAction(j["action"].get<std::string>());
    if (!action) throw ReviewError(Kind::invalid, "unknown action '" + j["action"].get<std::string>() + "'");
    d.action = *action;
    if (d.action != ReviewAction::approve) {
      if (j.contains("mapping_id") && j["mapping_id"].is_string()) {
        d.mapping_id = j["mapping_id"].get<std::string>();
      } else if (j.contains("entity_id") && j["entity_id"].is_string()) {
        p.entity_id = j["entity_id"].get<std::string>();
      } else {
        throw ReviewError(Kind::invalid, "'mapping_id' is required");
      }
    }
    if (j.contains("target_feature_id") && j["target_feature_id"].is_string()) {
      d.target_feature_id = j["target_feature_id"].get<std::string>();
    }
    if (j.contains("rationale") && j["rationale"].is_string()) d.rationale = j["rationale"].get<std::string>();
    return p;
  }

  // The single flagged record for the entity, else its single non-rejected one.
  static std::string mapping_for_entity(const UnifiedSpec& spec, const std::string& entity_id) {
    for (const bool flagged_only : {true, false}) {
      std::vector<std::string> hits;
      for (const auto& m : spec.mappings) {
        if (m.entity_id != entity_id) continue;
        if (flagged_only ? m.status == MappingStatus::flagged : m.status != MappingStatus::rejected) hits.push_back(m.id);
      }
      if (hits.size() == 1) return hits.front();
      if (hits.size() > 1) {
        throw ReviewError(ReviewError::Kind::invalid, "entity '" + entity_id + "' has several records; name a mapping_id");
      }
    }
    throw ReviewError(ReviewError::Kind::unknown_id, "no open record for entity '" + entity_id + "'");
  }

  HttpResult apply(const std::string& id, const Json& j, const std::vector<PendingDecision>& pending) {
    if (!j.contains("revision") || !j["revision"].is_number_integer()) {
      return error(400, "invalid", "'revision' (integer) is required");
    }
    const int expected = j["revision"].get<int>();
    if (!store_.latest_revision(id)) return error(404, "not_found", "no spec '" + id + "'");
    try {
      const UnifiedSpec current = *store_.load(id);
      if (current.revision != expected) {
        return error(409, "conflict",
                     "stale revision " + std::to_string(expected) + ", current is " + std::to_string(current.revision));
      }
      std::vector<ReviewDecision> decisions;
      for (const auto& p : pending) {
        decisions.push_back(p.decision);
        if (!p.entity_id.empty()) decisions.back().mapping_id = mapping_for_entity(current, p.entity_id);
      }
      const UnifiedSpec next = apply_review_decisions(current, decisions, clock_);
      // A concurrent writer that got there first turns this into a conflict.
      store_.commit(id, expected, next);
      return {200, Json(next)};
    } catch (const ReviewError& e) {
      return from(e);
    }
  }
};

}  // namespace drawmap
