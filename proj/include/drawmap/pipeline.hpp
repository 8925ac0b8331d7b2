#pragma once
// One part end to end: validate, enrich, score, assign, resolve, emit.

#include <stdexcept>
#include <string>
#include <vector>

#include "drawmap/assignment.hpp"
#include "drawmap/clock.hpp"
#include "drawmap/core.hpp"
#include "drawmap/enricher.hpp"
#include "drawmap/escalation.hpp"
#include "drawmap/resolver.hpp"
#include "drawmap/scoring.hpp"
#include "drawmap/spec_emitter.hpp"

namespace drawmap {

/// Inputs that cannot be run (exit code 2 territory).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kAblationVariants[] = {"full", "deterministic_only", "no_heuristics",
                                                         "no_llm_escalation", "no_context"};

/// Configuration for a named ablation. `strip_routing` selects whether removing
/// heuristics also removes type-aware dimension routing.
inline PipelineConfig ablation_config(const std::string& variant, PipelineConfig base = {}, bool strip_routing = true) {
  PipelineConfig c = std::move(base);
  c.ablation = variant;
  if (variant == "full") return c;
  if (variant == "deterministic_only") {
    c.heuristics_enabled = false;
    c.semantic_routing_enabled = !strip_routing;
    c.vlm_selection_enabled = false;
    c.llm_escalation_enabled = false;
    c.selection_mode = SelectionMode::argmax;
    return c;
  }
  if (variant == "no_heuristics") {
    c.heuristics_enabled = false;
    c.semantic_routing_enabled = !strip_routing;
    return c;
  }
  if (variant == "no_llm_escalation") {
    c.vlm_selection_enabled = false;
    c.llm_escalation_enabled = false;
    return c;
  }
  if (variant == "no_context") {
    c.context_enabled = false;
    c.w_c = 0.0;
    return c;
  }
  throw InputError("unknown ablation variant '" + variant + "'");
}

struct PartRun {
  std::vector<DrawingEntity> entities;  // after unit normalization
  std::vector<EnrichedDescriptor> descriptors;
  std::vector<ScoredCandidate> scored;
  AssignmentResult assignment;
  UnifiedSpec spec;
  std::vector<ValidationIssue> warnings;
};

struct PartInputs {
  std::string part_id;
  std::vector<Feature3D> features;
  std::vector<DrawingEntity> entities;
};

inline std::string describe(const ValidationIssue& i) { return i.code + " " + i.subject + ": " + i.message; }

inline PartRun run_part(const PartInputs& in, const PipelineConfig& cfg, const CompatibilityTable& table,
                        const Enricher& enricher, const EscalationClient* client, const Clock& clock) {
  if (auto problems = cfg.problems(); !problems.empty()) throw InputError("invalid configuration: " + problems.front());
  ValidationReport report = validate_part_inputs(in.features, in.entities);
  if (!report.admissible()) {
    std::string msg = "part " + in.part_id + " failed validation";
    for (const auto& i : report.issues) {
      if (i.severity == Severity::fatal) msg += "\n  " + describe(i);
    }
    throw InputError(msg);
  }

  PartRun run;
  run.warnings = report.issues;
  run.entities = std::move(report.normalized_entities);
  run.descriptors = enrich_all(run.entities, enricher);
  run.scored = score_all(in.features, run.entities, run.descriptors, cfg, table);
  run.assignment = build_candidate_sets(in.features, run.scored, cfg);
  expand_pattern_groups(run.assignment, in.features, run.descriptors, cfg);
  auto records = resolve({in.features, run.entities, run.descriptors, run.assignment}, cfg, client, clock);
  run.spec = emit_proposed_spec(in.part_id, std::move(records), in.features, run.entities, cfg);
  return run;
}

}  // namespace drawmap
