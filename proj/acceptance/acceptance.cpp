// Acceptance checks 1-10. One line per criterion: "PASS n ..." or "FAIL n ...".
// Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "drawmap/drawmap.hpp"

using namespace drawmap;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what) {
  std::cout << (ok ? "PASS " : "FAIL ") << n << "  " << what << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

Feature3D make_feature(std::string id, FeatureType t, std::map<std::string, double> params) {
  Feature3D f;
  f.id = std::move(id);
  f.feature_type = std::move(t);
  f.params = std::move(params);
  return f;
}

EnrichedDescriptor make_desc(NormalizedType t, double value, std::string target) {
  EnrichedDescriptor d;
  d.entity_id = "E";
  d.normalized_type = t;
  d.numeric_value = value;
  d.target_category = std::move(target);
  d.enrich_confidence = 0.95;
  return d;
}

const CompatibilityTable kTable = CompatibilityTable::defaults();

const FeatureKind kKinds[] = {FeatureKind::hole, FeatureKind::bore, FeatureKind::drill, FeatureKind::thread_hole,
                              FeatureKind::slot, FeatureKind::pocket, FeatureKind::fillet, FeatureKind::chamfer,
                              FeatureKind::boss, FeatureKind::plane, FeatureKind::groove,
                              FeatureKind::cylinder, FeatureKind::round};
const char* kCategories[] = {"hole", "bore", "drill", "thread_hole", "slot", "pocket", "fillet",
                             "chamfer", "boss", "plane", "groove", "cylinder", "round"};
const NormalizedType kDimKinds[] = {NormalizedType::diameter, NormalizedType::radius, NormalizedType::depth,
                                    NormalizedType::linear, NormalizedType::thread, NormalizedType::angle};

// ---------------------------------------------------------------------------

void criterion1() {
  PipelineConfig cfg;
  cfg.heuristics_enabled = false;
  const auto c = score_pair(make_feature("F", FeatureKind::hole, {{"diameter", 10.0}}),
                            make_desc(NormalizedType::diameter, 10.0, "hole"), false, cfg, kTable);
  const double err = std::abs(c.s_final - 0.90);
  report(1, err <= 1e-12, "score_pair exact/exact/no cues = " + fmt(c.s_final, 12) + " (want 0.90, |err| " +
                              std::to_string(err) + ")");
}

void criterion2() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> val(0.5, 50.0);
  int tested = 0, nonzero = 0;
  const auto t0 = std::chrono::steady_clock::now();
  while (tested < 1000) {
    const FeatureKind k = kKinds[rng() % std::size(kKinds)];
    const std::string cat = kCategories[rng() % std::size(kCategories)];
    const FeatureType ft(k);
    if (kTable.exact(ft.name(), cat) || kTable.semantic(ft.name(), cat)) continue;  // want incompatible pairs only
    auto d = make_desc(kDimKinds[rng() % std::size(kDimKinds)], val(rng), cat);
    d.has_diameter_symbol = rng() % 2;
    d.enrich_confidence = val(rng) / 50.0;
    const double x = d.numeric_value.value();
    const auto f = make_feature("F", ft, {{"diameter", x}, {"radius", x}, {"depth", x}, {"width", x}, {"length", x}});
    const auto c = score_pair(f, d, rng() % 2, PipelineConfig{}, kTable);
    nonzero += c.s_final != 0.0;
    ++tested;
  }
  const double secs = seconds_since(t0);
  report(2, nonzero == 0 && secs < 1.0,
         "type gate: " + std::to_string(tested) + " incompatible pairs, " + std::to_string(nonzero) + " nonzero, " +
             fmt(secs) + " s");
}

void criterion3() {
  const double eps = PipelineConfig{}.epsilon_mm;
  const double deltas[] = {0.0, eps / 2, eps, 1.5 * eps, 2 * eps, 3 * eps};
  const double want[] = {1.0, 1.0, 1.0, 0.7, 0.7, 0.0};
  bool ok = true;
  std::string got;
  for (double base : {1.0, 6.6, 10.0, 40.0, 125.0}) {
    for (int sign : {1, -1}) {
      for (int i = 0; i < 6; ++i) {
        const double s = score_dim(RoutedPair{base, base + sign * deltas[i], "d"}, true, eps).value;
        ok = ok && s == want[i];
        if (base == 10.0 && sign == 1) got += (i ? ", " : "") + fmt(s, 1);
      }
    }
  }
  report(3, ok, "dimension steps over {0, e/2, e, 1.5e, 2e, 3e} = {" + got + "}");
}

void criterion4() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> val(1.0, 40.0);
  int checked = 0, bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 20000 && checked < 1000; ++i) {
    const FeatureKind k = kKinds[rng() % std::size(kKinds)];
    auto d = make_desc(kDimKinds[rng() % std::size(kDimKinds)], val(rng), kCategories[rng() % std::size(kCategories)]);
    d.has_diameter_symbol = rng() % 2;
    const auto f = make_feature("F", k, {{"diameter", val(rng)}, {"radius", val(rng)}, {"depth", val(rng)},
                                         {"width", val(rng)}, {"angle", val(rng)}});
    const auto c = score_pair(f, d, rng() % 2, PipelineConfig{}, kTable);
    if (c.s_type == 0.0 || c.s_dim != 0.0) continue;
    ++checked;
    // Rebuild everything from the trace alone.
    double terms = 0.0, pre = NAN, mismatch = NAN, others = 1.0;
    for (const auto& s : c.trace) {
      if (s.kind == "term") terms += s.value;
      if (s.kind == "subtotal" && s.label == "pre_factor_sum") pre = s.value;
      if (s.kind == "factor" && s.label == "numeric_mismatch") {
        mismatch = s.value;
      } else if (s.kind == "factor") {
        others *= s.value;
      }
    }
    const double want = 0.3 * pre * others;
    const double err = std::max({std::abs(c.s_final - want), std::abs(terms - pre), std::abs(replay_trace(c.trace) - c.s_final)});
    worst = std::max(worst, err);
    if (!(mismatch == 0.3) || err > 1e-12) ++bad;
  }
  report(4, checked == 1000 && bad == 0,
         "mismatch factor: " + std::to_string(checked) + " mismatched pairs replayed, " + std::to_string(bad) +
             " off (max |err| " + std::to_string(worst) + ")");
}

void criterion5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.2);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(1 + rng() % 8);
    for (auto& x : s) x = (rng() % 5 == 0) ? std::round(u(rng) * 10) / 10 : u(rng);
    const auto got = select_near_ties(s, 0.9);
    const double best = *std::max_element(s.begin(), s.end());
    std::set<std::size_t> want;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] >= 0.9 * best) want.insert(j);
    }
    bad += std::set<std::size_t>(got.begin(), got.end()) != want;
  }
  report(5, bad == 0, "near-tie selection vs brute force on 1000 lists: " + std::to_string(bad) + " differ");
}

void criterion6() {
  const std::string dir = std::string(DRAWMAP_DATA_DIR) + "/bracket/";
  const auto features = load_json_file<FeaturesFile>(dir + "features.json");
  const auto entities = load_json_file<EntitiesFile>(dir + "entities.json");
  const auto truth = load_json_file<GroundTruth>(dir + "truth.json");
  const auto table = compatibility_from_json(parse_json_text(read_text_file(dir + "compatibility.json"), dir));
  const OracleClient oracle(truth);
  const auto run = run_part({features.part_id, features.features, entities.entities}, PipelineConfig{}, table,
                            Enricher{}, &oracle, FixedClock{});
  const LinkSet want{{"F1", "E1"}, {"F2", "E2"}, {"F3", "E3"}, {"F4", "E4"}};
  const auto m = compute_metrics(run.spec, truth);
  report(6, predicted_links(run.spec) == want && m.exact_match_rate == 1.0,
         "bracket fixture: " + std::to_string(predicted_links(run.spec).size()) + " links, exact-match rate " +
             fmt(m.exact_match_rate));
}

void criterion7() {
  std::mt19937_64 rng(7);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    LinkSet pred;
    GroundTruth truth;
    const int nf = 1 + rng() % 5, ne = 1 + rng() % 5;
    for (int f = 0; f < nf; ++f) {
      for (int e = 0; e < ne; ++e) {
        std::pair<std::string, std::string> l{"F" + std::to_string(f), "E" + std::to_string(e)};
        if (rng() % 3 == 0) pred.insert(l);
        if (rng() % 3 == 0) truth.links.insert(l);
      }
    }
    std::size_t tp = 0;
    for (const auto& a : pred) {
      for (const auto& b : truth.links) tp += a == b;
    }
    const auto m = compute_metrics(pred, truth);
    if (pred.empty() && truth.links.empty()) {
      bad += !(m.precision == 1.0 && m.recall == 1.0 && m.f1 == 1.0);
      continue;
    }
    const double p = pred.empty() ? 0.0 : double(tp) / double(pred.size());
    const double r = truth.links.empty() ? 0.0 : double(tp) / double(truth.links.size());
    const double f1 = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    const double err = std::max({std::abs(m.precision - p), std::abs(m.recall - r), std::abs(m.f1 - f1)});
    worst = std::max(worst, err);
    bad += m.correct != tp || err > 1e-12;
  }
  report(7, bad == 0, "metrics vs brute-force counter on 1000 instances: " + std::to_string(bad) +
                          " differ (max |err| " + std::to_string(worst) + ")");
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = load_corpus(std::string(DRAWMAP_DATA_DIR) + "/ambiguity_corpus");
  const auto runs = run_ablation(corpus, {"full", "deterministic_only", "no_heuristics"}, {}, kTable, {}, FixedClock{});
  const double secs = seconds_since(t0);
  const auto& full = runs[0].aggregate;
  const auto& det = runs[1].aggregate;
  const auto& noh = runs[2].aggregate;
  const bool ok = full.f1.mean >= det.f1.mean + 0.10 && full.f1.mean > det.f1.mean &&
                  full.precision.mean >= noh.precision.mean + 0.10 && secs < 30.0;
  report(8, ok,
         "ablation on " + std::to_string(corpus.size()) + " parts: F1 full " + fmt(full.f1.mean) + " vs deterministic_only " +
             fmt(det.f1.mean) + "; P full " + fmt(full.precision.mean) + " vs no_heuristics " +
             fmt(noh.precision.mean) + "; " + fmt(secs) + " s");
}

void criterion9() {
  const auto corpus = load_corpus(std::string(DRAWMAP_DATA_DIR) + "/ambiguity_corpus");
  auto once = [&] {
    const auto run = run_corpus(corpus, PipelineConfig{}, kTable, {}, FixedClock{}, 4);
    std::string bytes;
    for (const auto& s : run.specs) bytes += dump(Json(s));
    bytes += dump(report_json({run}));
    return bytes;
  };
  const std::string a = once(), b = once();
  report(9, a == b, "two offline map+eval runs: " + std::to_string(a.size()) + " bytes, " +
                        (a == b ? "identical" : "different"));
}

// Malformed replies by construction: every branch breaks the schema.
std::string fuzz_response(std::mt19937_64& rng) {
  Json j{{"decision", "map"}, {"target_feature_id", "F1"}, {"confidence", 0.8}, {"rationale", "x"}};
  switch (rng() % 12) {
    case 0: j.erase("decision"); break;
    case 1: j["decision"] = std::vector<std::string>{"maybe", "MAP", "", "accept"}[rng() % 4]; break;
    case 2: j.erase("target_feature_id"); break;
    case 3: j["target_feature_id"] = "F" + std::to_string(3 + rng() % 50); break;
    case 4: j["confidence"] = std::vector<double>{-0.1, 1.01, 7.0, -3.0}[rng() % 4]; break;
    case 5: j["confidence"] = "0.8"; break;
    case 6: j.erase("rationale"); break;
    case 7: j["extra_" + std::to_string(rng() % 9)] = 1; break;
    case 8: j["decision"] = "reject"; break;  // a reject may not name a target
    case 9: j["target_feature_id"] = 1; break;
    case 10: {
      const std::string s = j.dump();
      return s.substr(0, 1 + rng() % (s.size() - 2));  // truncated
    }
    default: return std::vector<std::string>{"", "null", "[]", "42", "\"map\"", "<html>", "{}"}[rng() % 7];
  }
  return j.dump();
}

struct FuzzClient final : EscalationClient {
  std::string body;
  TransportReply complete(const EscalationRequest&) const override { return {true, body, "", false}; }
};

void criterion10() {
  std::mt19937_64 rng(10);
  const std::vector<Feature3D> features{make_feature("F1", FeatureKind::hole, {{"diameter", 6.0}}),
                                        make_feature("F2", FeatureKind::hole, {{"diameter", 6.05}})};
  std::vector<DrawingEntity> entities(2);
  entities[0].id = "E1";
  entities[0].raw_text = "Ø6";
  entities[1].id = "E2";
  entities[1].raw_text = "Ø6.05";
  const PipelineConfig cfg;
  int not_rejected = 0, wrong_retries = 0, not_flagged = 0, crashes = 0;
  for (int i = 0; i < 500; ++i) {
    FuzzClient client;
    client.body = fuzz_response(rng);
    try {
      EscalationRequest req;
      req.entity = entities[0];
      req.candidates = {{features[0], 0.9}, {features[1], 0.9}};
      if (validate_escalation_response(client.body, req).response) ++not_rejected;

      const auto run = run_part({"fuzz", features, entities}, cfg, kTable, Enricher{}, &client, FixedClock{});
      for (const auto& m : run.spec.mappings) {
        if (m.status != MappingStatus::flagged) {
          ++not_flagged;
          continue;
        }
        // Per stage: one first attempt and exactly one retry.
        for (const char* stage : {"multimodal", "constrained_llm"}) {
          int first = 0, retry = 0;
          for (const auto& e : m.provenance) {
            if (e.stage == std::string(stage) + ":invalid") ++first;
            if (e.stage == std::string(stage) + ":retry:invalid") ++retry;
          }
          wrong_retries += !(first == 1 && retry == 1);
        }
      }
      if (run.spec.mappings.empty()) ++not_flagged;
    } catch (...) {
      ++crashes;
    }
  }
  report(10, not_rejected == 0 && wrong_retries == 0 && not_flagged == 0 && crashes == 0,
         "500 fuzzed replies: " + std::to_string(not_rejected) + " accepted by validator, " +
             std::to_string(wrong_retries) + " wrong retry counts, " + std::to_string(not_flagged) +
             " not flagged, " + std::to_string(crashes) + " crashes");
}

}  // namespace

int main() {
  const std::function<void()> checks[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                          criterion6, criterion7, criterion8, criterion9, criterion10};
  for (std::size_t i = 0; i < std::size(checks); ++i) {
    try {
      checks[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("threw: ") + e.what());
    }
  }
  return failures;
}
