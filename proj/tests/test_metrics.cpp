#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace drawmap;

namespace {

GroundTruth truth_of(LinkSet links) {
  GroundTruth t;
  t.part_id = "p";
  t.links = std::move(links);
  return t;
}

TEST(Metrics, Identity) {
  const auto m = compute_metrics(LinkSet{{"F1", "E1"}}, truth_of({{"F1", "E1"}}));
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.exact_match_rate, 1.0);
}

TEST(Metrics, HalfRight) {
  const auto m = compute_metrics(LinkSet{{"F1", "E1"}, {"F2", "E3"}}, truth_of({{"F1", "E1"}, {"F2", "E2"}}));
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
  EXPECT_DOUBLE_EQ(m.exact_match_rate, 0.5);
  EXPECT_DOUBLE_EQ(m.partial_match_rate, 0.5);
}

TEST(Metrics, EmptyConventions) {
  const auto both = compute_metrics(LinkSet{}, truth_of({}));
  EXPECT_EQ(both.precision, 1.0);
  EXPECT_EQ(both.f1, 1.0);
  const auto none_predicted = compute_metrics(LinkSet{}, truth_of({{"F1", "E1"}}));
  EXPECT_EQ(none_predicted.precision, 0.0);
  EXPECT_EQ(none_predicted.recall, 0.0);
  EXPECT_EQ(none_predicted.f1, 0.0);
}

TEST(Metrics, PartialMatchCountsOverlap) {
  const auto m = compute_metrics(LinkSet{{"F1", "E1"}}, truth_of({{"F1", "E1"}, {"F1", "E2"}}));
  EXPECT_EQ(m.exact_match_rate, 0.0);
  EXPECT_EQ(m.partial_match_rate, 1.0);
}

TEST(Metrics, AgreesWithBruteForceCounter) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    LinkSet pred, truth;
    const int nf = 1 + rng() % 4, ne = 1 + rng() % 4;
    for (int f = 0; f < nf; ++f) {
      for (int e = 0; e < ne; ++e) {
        const std::pair<std::string, std::string> link{"F" + std::to_string(f), "E" + std::to_string(e)};
        if (rng() % 3 == 0) pred.insert(link);
        if (rng() % 3 == 0) truth.insert(link);
      }
    }
    // brute force over vectors, no set lookups
    const std::vector<std::pair<std::string, std::string>> pv(pred.begin(), pred.end()), tv(truth.begin(), truth.end());
    int tp = 0;
    for (const auto& a : pv) {
      for (const auto& b : tv) tp += (a == b);
    }
    const auto m = compute_metrics(pred, truth_of(truth));
    if (pv.empty() && tv.empty()) continue;
    const double p = pv.empty() ? 0.0 : double(tp) / pv.size();
    const double r = tv.empty() ? 0.0 : double(tp) / tv.size();
    const double f1 = (p + r) == 0.0 ? 0.0 : 2 * p * r / (p + r);
    EXPECT_EQ(m.correct, static_cast<std::size_t>(tp));
    EXPECT_NEAR(m.precision, p, 1e-12);
    EXPECT_NEAR(m.recall, r, 1e-12);
    EXPECT_NEAR(m.f1, f1, 1e-12);
  }
}

TEST(Metrics, OnlyActiveRecordsArePredicted) {
  UnifiedSpec s;
  MappingRecord a, f, r, h;
  a = {"F1~E1", "F1", "E1", MappingMethod::deterministic, 1, 1, "", MappingStatus::accepted, {}, {}};
  f = {"F2~E2", "F2", "E2", MappingMethod::llm, 1, 1, "", MappingStatus::flagged, {}, {}};
  r = {"F3~E3", "F3", "E3", MappingMethod::human, 1, 1, "", MappingStatus::rejected, {}, {}};
  h = {"F4~E4", "F4", "E4", MappingMethod::human, 1, 1, "", MappingStatus::human_edited, {}, {}};
  s.mappings = {a, f, r, h};
  EXPECT_EQ(predicted_links(s), (LinkSet{{"F1", "E1"}, {"F4", "E4"}}));
}

TEST(Aggregate, SinglePart) {
  PartMetrics m;
  m.precision = 0.8;
  const auto a = macro_average({m});
  EXPECT_DOUBLE_EQ(a.precision.mean, 0.8);
  EXPECT_DOUBLE_EQ(a.precision.std, 0.0);
}

TEST(Aggregate, TwoParts) {
  PartMetrics x, y;
  x.precision = 1.0;
  y.precision = 0.5;
  const auto a = macro_average({x, y});
  EXPECT_DOUBLE_EQ(a.precision.mean, 0.75);
  EXPECT_DOUBLE_EQ(a.precision.std, 0.25);  // population
  EXPECT_DOUBLE_EQ(a.precision.min, 0.5);
  EXPECT_DOUBLE_EQ(a.precision.max, 1.0);
  EXPECT_THROW(macro_average({}), std::invalid_argument);
}

TEST(Reports, SummaryColumns) {
  PartMetrics m;
  const auto table = format_summary_table(macro_average({m}));
  EXPECT_EQ(table.substr(0, table.find('\n')).find("Mean"), 22u);
  for (const char* col : {"Std", "Min", "Max", "Mapping Precision", "Exact Match Rate"}) {
    EXPECT_NE(table.find(col), std::string::npos) << col;
  }
}

TEST(Reports, EmptyAblationTableIsHeaderOnly) {
  const auto t = format_ablation_table({});
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 1);
  EXPECT_NE(t.find("Variant"), std::string::npos);
}

TEST(Reports, UnknownTruthIds) {
  UnifiedSpec s;
  s.feature_ids = {"F1"};
  s.entity_ids = {"E1"};
  const auto ids = unknown_truth_ids(s, truth_of({{"F1", "E1"}, {"F2", "E9"}}));
  EXPECT_EQ(ids, (std::vector<std::string>{"entity E9", "feature F2"}));
}

}  // namespace
