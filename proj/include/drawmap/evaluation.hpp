#pragma once
// Corpus-level runs: every part through one configuration, then macro averages;
// the ablation table repeats that per variant.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "drawmap/corpus.hpp"
#include "drawmap/metrics.hpp"
#include "drawmap/pipeline.hpp"

namespace drawmap {

struct EscalationPolicy {
  std::string name = "oracle";  // see kMockPolicies
  std::string script_path;
};

struct CorpusRun {
  std::string variant;
  std::vector<UnifiedSpec> specs;
  std::vector<PartMetrics> parts;
  AggregateMetrics aggregate;
};

/// Parts run independently on up to `jobs` threads; results keep corpus order.
inline CorpusRun run_corpus(const std::vector<CorpusPart>& corpus, const PipelineConfig& cfg,
                            const CompatibilityTable& table, const EscalationPolicy& policy, const Clock& clock,
                            int jobs = 1) {
  CorpusRun run;
  run.variant = cfg.ablation;
  run.specs.resize(corpus.size());
  run.parts.resize(corpus.size());
  const Enricher enricher(EnricherBackend{}, cfg);
  resolver_detail::parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const auto& part = corpus[i];
    const auto client = make_mock_client(policy.name, part.truth, policy.script_path);
    run.specs[i] = run_part(part.inputs, cfg, table, enricher, client.get(), clock).spec;
    run.parts[i] = compute_metrics(run.specs[i], part.truth);
  });
  if (!corpus.empty()) run.aggregate = macro_average(run.parts);
  return run;
}

inline std::vector<CorpusRun> run_ablation(const std::vector<CorpusPart>& corpus,
                                           const std::vector<std::string>& variants, const PipelineConfig& base,
                                           const CompatibilityTable& table, const EscalationPolicy& policy,
                                           const Clock& clock, int jobs = 1, bool strip_routing = true) {
  std::vector<CorpusRun> out;
  for (const auto& v : variants) {
    out.push_back(run_corpus(corpus, ablation_config(v, base, strip_routing), table, policy, clock, jobs));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace report_detail {
inline std::string cell(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << v;
  return os.str();
}
inline std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
}  // namespace report_detail

/// Mean / Std / Min / Max per metric.
inline std::string format_summary_table(const AggregateMetrics& a) {
  using namespace report_detail;
  std::ostringstream os;
  os << pad("Metric", 22) << pad("Mean", 10) << pad("Std", 10) << pad("Min", 10) << "Max\n";
  auto row = [&](const char* name, const Summary& s) {
    os << pad(name, 22) << pad(cell(s.mean), 10) << pad(cell(s.std), 10) << pad(cell(s.min), 10) << cell(s.max)
       << "\n";
  };
  row("Mapping Precision", a.precision);
  row("Mapping Recall", a.recall);
  row("Mapping F1", a.f1);
  row("Exact Match Rate", a.exact_match_rate);
  row("Partial Match Rate", a.partial_match_rate);
  return os.str();
}

/// Variant / P / R / F1, one row per run.
inline std::string format_ablation_table(const std::vector<CorpusRun>& runs) {
  using namespace report_detail;
  std::ostringstream os;
  os << pad("Variant", 22) << pad("P", 10) << pad("R", 10) << "F1\n";
  for (const auto& r : runs) {
    os << pad(r.variant, 22) << pad(cell(r.aggregate.precision.mean), 10) << pad(cell(r.aggregate.recall.mean), 10)
       << cell(r.aggregate.f1.mean) << "\n";
  }
  return os.str();
}

inline Json report_json(const std::vector<CorpusRun>& runs) {
  Json variants = Json::array();
  for (const auto& r : runs) {
    variants.push_back(Json{{"variant", r.variant}, {"aggregate", r.aggregate}, {"parts", r.parts}});
  }
  return Json{{"variants", variants}};
}

}  // namespace drawmap
