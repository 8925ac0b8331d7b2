#pragma once
// Link-level precision / recall / F1 and feature-level match rates.
//
//   P = |M & M*| / |M|,  R = |M & M*| / |M*|,  F1 = 2PR / (P + R)
//
// An empty denominator scores 1.0 when both sets are empty and 0.0 otherwise.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drawmap/core.hpp"
#include "drawmap/serialization.hpp"

namespace drawmap {

using LinkSet = std::set<std::pair<std::string, std::string>>;  // (feature_id, entity_id)

struct PartMetrics {
  std::string part_id;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double exact_match_rate = 0.0;
  double partial_match_rate = 0.0;
  std::size_t predicted = 0;  // |M|
  std::size_t truth = 0;      // |M*|
  std::size_t correct = 0;    // |M & M*|
};

inline void to_json(Json& j, const PartMetrics& m) {
  j = Json{{"part_id", m.part_id},
           {"precision", m.precision},
           {"recall", m.recall},
           {"f1", m.f1},
           {"exact_match_rate", m.exact_match_rate},
           {"partial_match_rate", m.partial_match_rate},
           {"predicted", m.predicted},
           {"truth", m.truth},
           {"correct", m.correct}};
}

inline double safe_ratio(std::size_t num, std::size_t den, bool both_empty) {
  if (den == 0) return both_empty ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline PartMetrics compute_metrics(const LinkSet& predicted, const GroundTruth& truth) {
  PartMetrics m;
  m.part_id = truth.part_id;
  m.predicted = predicted.size();
  m.truth = truth.links.size();
  for (const auto& link : predicted) m.correct += truth.links.count(link);
  const bool both_empty = predicted.empty() && truth.links.empty();
  m.precision = safe_ratio(m.correct, m.predicted, both_empty);
  m.recall = safe_ratio(m.correct, m.truth, both_empty);
  m.f1 = both_empty ? 1.0 : f1_score(m.precision, m.recall);

  std::map<std::string, std::set<std::string>> pred_by_feature, truth_by_feature;
  for (const auto& [f, e] : predicted) pred_by_feature[f].insert(e);
  for (const auto& [f, e] : truth.links) truth_by_feature[f].insert(e);
  std::set<std::string> features;
  for (const auto& [f, _] : pred_by_feature) features.insert(f);
  for (const auto& [f, _] : truth_by_feature) features.insert(f);
  if (features.empty()) {
    m.exact_match_rate = 1.0;
    m.partial_match_rate = 1.0;
  } else {
    std::size_t exact = 0, partial = 0;
    for (const auto& f : features) {
      const auto& p = pred_by_feature[f];
      const auto& t = truth_by_feature[f];
      if (p == t) ++exact;
      const bool overlap = std::any_of(p.begin(), p.end(), [&](const std::string& e) { return t.count(e) > 0; });
      if (overlap || (p.empty() && t.empty())) ++partial;
    }
    m.exact_match_rate = static_cast<double>(exact) / static_cast<double>(features.size());
    m.partial_match_rate = static_cast<double>(partial) / static_cast<double>(features.size());
  }
  return m;
}

/// Accepted and human-edited records form M; flagged and rejected ones do not.
inline LinkSet predicted_links(const UnifiedSpec& spec) {
  LinkSet out;
  for (const auto& m : spec.mappings) {
    if (is_active(m.status)) out.emplace(m.feature_id, m.entity_id);
  }
  return out;
}

inline PartMetrics compute_metrics(const UnifiedSpec& spec, const GroundTruth& truth) {
  PartMetrics m = compute_metrics(predicted_links(spec), truth);
  m.part_id = spec.part_id;
  return m;
}

/// Ground-truth ids the spec does not know about, as "feature X" / "entity Y".
inline std::vector<std::string> unknown_truth_ids(const UnifiedSpec& spec, const GroundTruth& truth) {
  std::set<std::string> features(spec.feature_ids.begin(), spec.feature_ids.end());
  std::set<std::string> entities(spec.entity_ids.begin(), spec.entity_ids.end());
  std::set<std::string> out;
  for (const auto& [f, e] : truth.links) {
    if (!features.count(f)) out.insert("feature " + f);
    if (!entities.count(e)) out.insert("entity " + e);
  }
  return {out.begin(), out.end()};
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

inline void to_json(Json& j, const Summary& s) {
  j = Json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

inline Summary summarize(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("summarize: empty sample");
  Summary s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  return s;
}

struct AggregateMetrics {
  std::size_t parts = 0;
  Summary precision, recall, f1, exact_match_rate, partial_match_rate;
};

inline void to_json(Json& j, const AggregateMetrics& a) {
  j = Json{{"parts", a.parts},
           {"precision", a.precision},
           {"recall", a.recall},
           {"f1", a.f1},
           {"exact_match_rate", a.exact_match_rate},
           {"partial_match_rate", a.partial_match_rate}};
}

inline AggregateMetrics macro_average(const std::vector<PartMetrics>& parts) {
  if (parts.empty()) throw std::invalid_argument("macro_average: no parts");
  auto column = [&](double PartMetrics::*field) {
    std::vector<double> xs;
    xs.reserve(parts.size());
    for (const auto& p : parts) xs.push_back(p.*field);
    return summarize(xs);
  };
  AggregateMetrics a;
  a.parts = parts.size();
  a.precision = column(&PartMetrics::precision);
  a.recall = column(&PartMetrics::recall);
  a.f1 = column(&PartMetrics::f1);
  a.exact_match_rate = column(&PartMetrics::exact_match_rate);
  a.partial_match_rate = column(&PartMetrics::partial_match_rate);
  return a;
}

}  // namespace drawmap
