#pragma once
// Turns candidate sets into mapping records. A link is settled by the scorer
// alone when its feature has a single near-tie candidate scoring at least
// theta_escal; every other near-tie link is escalated per entity, with the
// features that entity is ambiguous for as candidates.

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "drawmap/assignment.hpp"
#include "drawmap/clock.hpp"
#include "drawmap/core.hpp"
#include "drawmap/escalation.hpp"
#include "drawmap/serialization.hpp"

namespace drawmap {

struct ResolveInputs {
  const std::vector<Feature3D>& features;
  const std::vector<DrawingEntity>& entities;
  const std::vector<EnrichedDescriptor>& descriptors;
  const AssignmentResult& assignment;
};

namespace resolver_detail {

inline ProvenanceEvent scoring_event(const ScoredCandidate& c, const Clock& clock) {
  const std::string trace = Json(c.trace).dump();
  return {"scoring", clock.now(), "engine", digest_hex(trace), ""};
}

inline ProvenanceEvent attempt_event(const EscalationAttempt& a, const Clock& clock) {
  std::string actor = a.stage == EscalationStage::multimodal ? "vlm" : "llm";
  std::string stage(to_string(a.stage));
  if (a.attempt > 0) stage += ":retry";
  if (a.transport_failed) stage += ":transport_error";
  if (a.validation_error) stage += ":invalid";
  return {stage, clock.now(), actor, digest_hex(a.raw), a.raw};
}

inline MappingRecord record_for(const ScoredCandidate& c) {
  MappingRecord r;
  r.id = mapping_id(c.feature_id, c.entity_id);
  r.feature_id = c.feature_id;
  r.entity_id = c.entity_id;
  r.score = c.s_final;
  return r;
}

/// Run fn(i) for i in [0, n) on up to `width` threads.
template <typename Fn>
void parallel_for(std::size_t n, int width, Fn fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, width)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace resolver_detail

/// `client` may be null, in which case every ambiguous link is flagged.
inline std::vector<MappingRecord> resolve(const ResolveInputs& in, const PipelineConfig& cfg,
                                          const EscalationClient* client, const Clock& clock) {
  using namespace resolver_detail;
  std::vector<MappingRecord> records;

  if (cfg.selection_mode == SelectionMode::argmax) {
    for (const auto& set : in.assignment.sets) {
      const ScoredCandidate& top = set.ranked.front();
      MappingRecord r = record_for(top);
      r.method = MappingMethod::deterministic;
      r.status = MappingStatus::accepted;
      r.confidence = std::clamp(top.s_final, 0.0, 1.0);
      r.rationale = "highest score";
      r.provenance.push_back(scoring_event(top, clock));
      records.push_back(std::move(r));
    }
  } else {
    std::map<std::string, std::vector<ScoredCandidate>> ambiguous;  // entity -> feature candidates
    for (const auto& set : in.assignment.sets) {
      const auto ties = set.near_tie_set();
      for (const auto& c : ties) {
        if (in.assignment.multiplicity_unsatisfied.count(c.entity_id)) {
          MappingRecord r = record_for(c);
          r.method = MappingMethod::deterministic;
          r.status = MappingStatus::flagged;
          r.confidence = std::clamp(c.s_final, 0.0, 1.0);
          r.rationale = "multiplicity unsatisfied";
          r.candidates = set.ranked;
          r.provenance.push_back(scoring_event(c, clock));
          records.push_back(std::move(r));
        } else if (ties.size() == 1 && c.s_final >= cfg.theta_escal) {
          MappingRecord r = record_for(c);
          r.method = MappingMethod::deterministic;
          r.status = MappingStatus::accepted;
          r.confidence = std::clamp(c.s_final, 0.0, 1.0);
          r.rationale = "single candidate above escalation threshold";
          r.provenance.push_back(scoring_event(c, clock));
          records.push_back(std::move(r));
        } else {
          ambiguous[c.entity_id].push_back(c);
        }
      }
    }

    std::map<std::string, std::size_t> entity_index;
    for (std::size_t j = 0; j < in.entities.size(); ++j) entity_index[in.entities[j].id] = j;
    std::map<std::string, const Feature3D*> feature_by_id;
    for (const auto& f : in.features) feature_by_id[f.id] = &f;

    std::vector<std::pair<std::string, std::vector<ScoredCandidate>>> jobs(ambiguous.begin(), ambiguous.end());
    for (auto& [_, cands] : jobs) {
      std::sort(cands.begin(), cands.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.s_final != b.s_final) return a.s_final > b.s_final;
        return a.feature_id < b.feature_id;
      });
    }

    std::vector<EscalationOutcome> outcomes(jobs.size());
    parallel_for(jobs.size(), cfg.max_in_flight, [&](std::size_t k) {
      const auto& [entity_id, cands] = jobs[k];
      if (!client) {
        outcomes[k].reason = "escalation unavailable";
        return;
      }
      const std::size_t j = entity_index.at(entity_id);
      EscalationRequest req;
      req.entity = in.entities[j];
      req.descriptor = in.descriptors[j];
      req.drawing_region = in.entities[j].context.image_ref;
      for (const auto& c : cands) req.candidates.push_back({*feature_by_id.at(c.feature_id), c.s_final});
      outcomes[k] = escalate(std::move(req), *client, cfg);
    });

    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const auto& [entity_id, cands] = jobs[k];
      const EscalationOutcome& out = outcomes[k];
      std::vector<ProvenanceEvent> escalation_events;
      for (const auto& a : out.attempts) escalation_events.push_back(attempt_event(a, clock));

      if (out.result == EscalationResult::mapped) {
        const std::string& target = *out.response->target_feature_id;
        std::set<std::string> targets{target};
        if (auto g = in.assignment.pattern_groups.find(entity_id); g != in.assignment.pattern_groups.end()) {
          if (std::find(g->second.begin(), g->second.end(), target) != g->second.end()) {
            targets.insert(g->second.begin(), g->second.end());
          }
        }
        for (const auto& c : cands) {
          if (!targets.count(c.feature_id)) continue;
          MappingRecord r = record_for(c);
          r.method = *out.resolved_by == EscalationStage::multimodal ? MappingMethod::deterministic_vlm
                                                                      : MappingMethod::llm;
          r.status = MappingStatus::accepted;
          r.confidence = out.response->confidence;
          r.rationale = out.response->rationale;
          if (c.feature_id != target) r.rationale += " (pattern member of " + target + ")";
          r.provenance.push_back(scoring_event(c, clock));
          r.provenance.insert(r.provenance.end(), escalation_events.begin(), escalation_events.end());
          records.push_back(std::move(r));
        }
      } else {
        const ScoredCandidate& top = cands.front();
        MappingRecord r = record_for(top);
        if (out.attempts.empty()) {
          r.method = MappingMethod::deterministic;
        } else {
          r.method = out.attempts.back().stage == EscalationStage::multimodal ? MappingMethod::deterministic_vlm
                                                                              : MappingMethod::llm;
        }
        r.status = MappingStatus::flagged;
        r.confidence = out.response ? out.response->confidence : std::clamp(top.s_final, 0.0, 1.0);
        r.rationale = out.reason;
        r.candidates = cands;
        r.provenance.push_back(scoring_event(top, clock));
        r.provenance.insert(r.provenance.end(), escalation_events.begin(), escalation_events.end());
        records.push_back(std::move(r));
      }
    }
  }

  std::sort(records.begin(), records.end(), [](const MappingRecord& a, const MappingRecord& b) {
    if (a.feature_id != b.feature_id) return a.feature_id < b.feature_id;
    return a.entity_id < b.entity_id;
  });
  return records;
}

}  // namespace drawmap
