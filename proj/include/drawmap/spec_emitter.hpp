#pragma once
// Builds the unified specification from resolved mapping records and applies
// reviewer decisions to it.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "drawmap/clock.hpp"
#include "drawmap/core.hpp"
#include "drawmap/serialization.hpp"

namespace drawmap {

/// A broken internal guarantee (exit code 3 territory), as opposed to bad input.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recompute unmapped entities and unconstrained features from the records.
inline void refresh_buckets(UnifiedSpec& spec) {
  std::map<std::string, std::vector<const MappingRecord*>> by_entity;
  std::set<std::string> constrained;
  for (const auto& m : spec.mappings) {
    by_entity[m.entity_id].push_back(&m);
    if (is_active(m.status) || m.status == MappingStatus::flagged) constrained.insert(m.feature_id);
  }

  spec.unmapped_entities.clear();
  for (const auto& e : spec.entity_ids) {
    const auto it = by_entity.find(e);
    if (it == by_entity.end()) {
      spec.unmapped_entities.push_back({e, "no candidate"});
      continue;
    }
    const auto& recs = it->second;
    if (std::any_of(recs.begin(), recs.end(), [](const MappingRecord* m) { return is_active(m->status); })) continue;
    const MappingRecord* rejected = nullptr;
    const MappingRecord* flagged = nullptr;
    for (const auto* m : recs) {
      if (m->status == MappingStatus::rejected && !rejected) rejected = m;
      if (m->status == MappingStatus::flagged && !flagged) flagged = m;
    }
    if (flagged) {
      spec.unmapped_entities.push_back({e, "flagged: " + flagged->rationale});
    } else {
      spec.unmapped_entities.push_back({e, "rejected: " + rejected->rationale});
    }
  }

  spec.unconstrained_features.clear();
  for (const auto& f : spec.feature_ids) {
    if (!constrained.count(f)) spec.unconstrained_features.push_back(f);
  }
}

inline UnifiedSpec emit_proposed_spec(const std::string& part_id, std::vector<MappingRecord> mappings,
                                      const std::vector<Feature3D>& features,
                                      const std::vector<DrawingEntity>& entities, const PipelineConfig& cfg) {
  UnifiedSpec spec;
  spec.part_id = part_id;
  spec.mappings = std::move(mappings);
  for (const auto& e : entities) spec.entity_ids.push_back(e.id);
  for (const auto& f : features) spec.feature_ids.push_back(f.id);
  spec.config_snapshot = cfg;

  std::set<std::string> known_entities(spec.entity_ids.begin(), spec.entity_ids.end());
  std::set<std::string> known_features(spec.feature_ids.begin(), spec.feature_ids.end());
  std::set<std::string> ids;
  for (const auto& m : spec.mappings) {
    if (!known_entities.count(m.entity_id) || !known_features.count(m.feature_id)) {
      throw InvariantError("mapping " + m.id + " references an unknown id");
    }
    if (!ids.insert(m.id).second) throw InvariantError("duplicate mapping id " + m.id);
  }
  refresh_buckets(spec);
  if (auto missing = exhaustiveness_violations(spec); !missing.empty()) {
    throw InvariantError("entity " + missing.front() + " is in no bucket");
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Review

enum class ReviewAction { accept, reject, edit, approve };

inline constexpr detail::NameTable<ReviewAction, 4> kReviewActionNames{{
    {ReviewAction::accept, "accept"},
    {ReviewAction::reject, "reject"},
    {ReviewAction::edit, "edit"},
    {ReviewAction::approve, "approve"},
}};
inline std::string_view to_string(ReviewAction a) { return detail::lookup_name(kReviewActionNames, a); }
inline std::optional<ReviewAction> parse_ReviewAction(std::string_view s) {
  return detail::lookup_value(kReviewActionNames, s);
}

struct ReviewDecision {
  std::string mapping_id;  // unused for approve
  ReviewAction action = ReviewAction::accept;
  std::optional<std::string> target_feature_id;  // edit only
  std::string reviewer;
  std::string rationale;
};

inline void to_json(Json& j, const ReviewDecision& d) {
  j = Json{{"mapping_id", d.mapping_id},
           {"action", to_string(d.action)},
           {"reviewer", d.reviewer},
           {"rationale", d.rationale}};
  if (d.target_feature_id) j["target_feature_id"] = *d.target_feature_id;
}

class ReviewError : public std::runtime_error {
 public:
  enum class Kind { unknown_id, invalid, conflict, refused };
  ReviewError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Apply decisions in order, all or nothing. Bumps the revision once.
inline UnifiedSpec apply_review_decisions(const UnifiedSpec& current, const std::vector<ReviewDecision>& decisions,
                                          const Clock& clock) {
  using Kind = ReviewError::Kind;
  UnifiedSpec spec = current;

  for (const auto& d : decisions) {
    if (spec.approval) throw ReviewError(Kind::conflict, "specification is already approved");
    if (d.reviewer.empty()) throw ReviewError(Kind::invalid, "reviewer is required");

    if (d.action == ReviewAction::approve) {
      const auto flagged = spec.count(MappingStatus::flagged);
      if (flagged > 0) {
        throw ReviewError(Kind::refused, std::to_string(flagged) + " flagged mapping(s) still need a decision");
      }
      spec.approval = Approval{d.reviewer, clock.now()};
      continue;
    }

    auto it = std::find_if(spec.mappings.begin(), spec.mappings.end(),
                           [&](const MappingRecord& m) { return m.id == d.mapping_id; });
    if (it == spec.mappings.end()) throw ReviewError(Kind::unknown_id, "unknown mapping id '" + d.mapping_id + "'");

    const std::string payload = Json(d).dump();
    const ProvenanceEvent event{"review", clock.now(), "human:" + d.reviewer, digest_hex(payload), payload};

    switch (d.action) {
      case ReviewAction::accept:
        if (it->status != MappingStatus::accepted) {
          it->status = MappingStatus::accepted;
          it->method = MappingMethod::human;
          if (!d.rationale.empty()) it->rationale = d.rationale;
        }
        it->provenance.push_back(event);
        break;
      case ReviewAction::reject:
        it->status = MappingStatus::rejected;
        it->rationale = d.rationale.empty() ? "rejected by " + d.reviewer : d.rationale;
        it->provenance.push_back(event);
        break;
      case ReviewAction::edit: {
        if (!d.target_feature_id) throw ReviewError(Kind::invalid, "edit requires target_feature_id");
        const std::string& target = *d.target_feature_id;
        if (std::find(spec.feature_ids.begin(), spec.feature_ids.end(), target) == spec.feature_ids.end()) {
          throw ReviewError(Kind::unknown_id, "unknown feature id '" + target + "'");
        }
        const std::string new_id = mapping_id(target, it->entity_id);
        if (new_id != it->id && std::any_of(spec.mappings.begin(), spec.mappings.end(),
                                            [&](const MappingRecord& m) { return m.id == new_id; })) {
          throw ReviewError(Kind::invalid, "mapping " + new_id + " already exists");
        }
        it->id = new_id;
        it->feature_id = target;
        it->status = MappingStatus::human_edited;
        it->method = MappingMethod::human;
        it->confidence = 1.0;
        if (!d.rationale.empty()) it->rationale = d.rationale;
        it->provenance.push_back(event);
        break;
      }
      case ReviewAction::approve:
        break;
    }
  }

  std::sort(spec.mappings.begin(), spec.mappings.end(), [](const MappingRecord& a, const MappingRecord& b) {
    if (a.feature_id != b.feature_id) return a.feature_id < b.feature_id;
    return a.entity_id < b.entity_id;
  });
  refresh_buckets(spec);
  ++spec.revision;
  return spec;
}

}  // namespace drawmap
