#pragma once
// Per-feature candidate filtering and near-tie selection:
//
//   candidates_i = { e_j : S_ij >= theta_cand }
//   A_i          = { e_j in candidates_i : S_ij >= rho * max_k S_ik }
//
// plus expansion of nX callouts onto groups of similar features.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "drawmap/core.hpp"
#include "drawmap/scoring.hpp"

namespace drawmap {

struct CandidateSet {
  std::string feature_id;
  std::vector<ScoredCandidate> ranked;  // s_final descending, then entity id ascending
  std::size_t near_tie_count = 0;       // A_i is the first near_tie_count entries of ranked

  std::vector<ScoredCandidate> near_tie_set() const {
    return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(near_tie_count)};
  }
};

/// Canonical ranking order.
inline bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.s_final != b.s_final) return a.s_final > b.s_final;
  return a.entity_id < b.entity_id;
}

/// Indices of scores with s >= rho * max, in input order.
inline std::vector<std::size_t> select_near_ties(const std::vector<double>& scores, double rho) {
  std::vector<std::size_t> out;
  if (scores.empty()) return out;
  const double best = *std::max_element(scores.begin(), scores.end());
  const double cutoff = rho * best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= cutoff) out.push_back(i);
  }
  return out;
}

inline void rerank(CandidateSet& set, double rho) {
  std::sort(set.ranked.begin(), set.ranked.end(), ranks_before);
  std::vector<double> scores;
  scores.reserve(set.ranked.size());
  for (const auto& c : set.ranked) scores.push_back(c.s_final);
  // ranked is sorted, so the selected indices form a prefix
  set.near_tie_count = select_near_ties(scores, rho).size();
}

struct AssignmentResult {
  std::vector<CandidateSet> sets;  // feature input order
  std::vector<std::string> unconstrained_features;
  // entity id -> features it was spread over by an nX callout (including the best match)
  std::map<std::string, std::vector<std::string>> pattern_groups;
  std::set<std::string> multiplicity_unsatisfied;
};

/// Filter by theta_cand and rank per feature.
inline AssignmentResult build_candidate_sets(const std::vector<Feature3D>& features,
                                             const std::vector<ScoredCandidate>& scored, const PipelineConfig& cfg) {
  std::map<std::string, CandidateSet> by_feature;
  for (const auto& c : scored) {
    if (c.s_final >= cfg.theta_cand) by_feature[c.feature_id].ranked.push_back(c);
  }
  AssignmentResult out;
  for (const auto& f : features) {
    auto it = by_feature.find(f.id);
    if (it == by_feature.end()) {
      out.unconstrained_features.push_back(f.id);
      continue;
    }
    CandidateSet set = std::move(it->second);
    set.feature_id = f.id;
    rerank(set, cfg.rho);
    out.sets.push_back(std::move(set));
  }
  return out;
}

/// Parameters the scorer can route a dimension to.
inline bool is_routable_param(const std::string& key) {
  static const std::set<std::string> kRoutable{"diameter", "radius", "depth", "width", "length", "angle",
                                               "counterbore_diameter", "countersink_diameter"};
  return kRoutable.count(key) > 0;
}

/// Same pattern id, or same type with every shared routable parameter within epsilon.
inline bool geometrically_similar(const Feature3D& a, const Feature3D& b, double epsilon) {
  if (a.metadata.pattern_id && b.metadata.pattern_id && *a.metadata.pattern_id == *b.metadata.pattern_id) return true;
  if (a.feature_type != b.feature_type) return false;
  bool shared = false;
  for (const auto& [key, va] : a.params) {
    if (!is_routable_param(key)) continue;
    auto it = b.params.find(key);
    if (it == b.params.end()) continue;
    shared = true;
    if (std::abs(va - it->second) > epsilon + kBandSlack) return false;
  }
  return shared;
}

/// Spread each nX descriptor from its best feature onto the similar-feature group
/// when the group holds at least n instances; otherwise mark the entity.
inline void expand_pattern_groups(AssignmentResult& result, const std::vector<Feature3D>& features,
                                  const std::vector<EnrichedDescriptor>& descriptors, const PipelineConfig& cfg) {
  std::map<std::string, const Feature3D*> feature_by_id;
  for (const auto& f : features) feature_by_id[f.id] = &f;

  for (const auto& d : descriptors) {
    if (d.multiplicity <= 1) continue;

    // best surviving candidate for this entity across all features
    const ScoredCandidate* best = nullptr;
    for (const auto& set : result.sets) {
      for (const auto& c : set.ranked) {
        if (c.entity_id != d.entity_id) continue;
        if (!best || c.s_final > best->s_final || (c.s_final == best->s_final && c.feature_id < best->feature_id)) {
          best = &c;
        }
      }
    }
    if (!best) continue;
    const ScoredCandidate seed = *best;
    const Feature3D& anchor = *feature_by_id.at(seed.feature_id);

    std::vector<std::string> group;
    int instances = 0;
    for (const auto& f : features) {
      if (f.id == anchor.id || geometrically_similar(anchor, f, cfg.epsilon_mm)) {
        group.push_back(f.id);
        instances += std::max(1, f.metadata.instance_count);
      }
    }
    if (instances < d.multiplicity) {
      result.multiplicity_unsatisfied.insert(d.entity_id);
      continue;
    }
    if (!cfg.pattern_expansion_enabled) continue;
    result.pattern_groups[d.entity_id] = group;

    for (const auto& fid : group) {
      auto set_it = std::find_if(result.sets.begin(), result.sets.end(),
                                 [&](const CandidateSet& s) { return s.feature_id == fid; });
      if (set_it == result.sets.end()) {
        CandidateSet fresh;
        fresh.feature_id = fid;
        // keep feature input order
        auto pos = result.sets.begin();
        for (const auto& f : features) {
          if (f.id == fid) break;
          if (pos != result.sets.end() && pos->feature_id == f.id) ++pos;
        }
        set_it = result.sets.insert(pos, std::move(fresh));
        auto& uc = result.unconstrained_features;
        uc.erase(std::remove(uc.begin(), uc.end(), fid), uc.end());
      }
      const bool present = std::any_of(set_it->ranked.begin(), set_it->ranked.end(),
                                       [&](const ScoredCandidate& c) { return c.entity_id == d.entity_id; });
      if (present) continue;
      ScoredCandidate copy = seed;
      copy.feature_id = fid;
      copy.trace.push_back({"note", "pattern_expansion", static_cast<double>(d.multiplicity),
                            "copied from " + seed.feature_id});
      set_it->ranked.push_back(std::move(copy));
      rerank(*set_it, cfg.rho);
    }
  }
}

}  // namespace drawmap
