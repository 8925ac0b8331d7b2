#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace drawmap;
using fx::desc;
using fx::feature;

namespace {

const CompatibilityTable kTable = CompatibilityTable::defaults();

TEST(TypeScore, ExactSemanticAndIncompatible) {
  const auto hole = feature("F", FeatureKind::hole);
  EXPECT_DOUBLE_EQ(score_type(hole, desc("E", NormalizedType::diameter, 10.0, "hole"), kTable).value, 1.0);
  EXPECT_DOUBLE_EQ(score_type(hole, desc("E", NormalizedType::diameter, 10.0, "bore"), kTable).value, 0.9);
  const auto fillet = feature("F", FeatureKind::fillet);
  EXPECT_DOUBLE_EQ(score_type(fillet, desc("E", NormalizedType::linear, 10.0, "slot"), kTable).value, 0.0);
}

TEST(TypeScore, UnknownDescriptorHasNoCategory) {
  const auto hole = feature("F", FeatureKind::hole);
  EXPECT_DOUBLE_EQ(score_type(hole, desc("E", NormalizedType::unknown, std::nullopt), kTable).value, 0.0);
}

TEST(TypeScore, SemanticGroupsFromFile) {
  const auto t = compatibility_from_json(Json::parse(R"({"semantic": [["gusset", "rib"]]})"));
  const auto gusset = feature("F", FeatureType::parse("gusset"));
  EXPECT_DOUBLE_EQ(score_type(gusset, desc("E", NormalizedType::linear, 5.0, "rib"), t).value, 0.9);
  EXPECT_DOUBLE_EQ(score_type(gusset, desc("E", NormalizedType::linear, 5.0, "hole"), t).value, 0.0);
}

TEST(Routing, RadiusFallsBackToHalfDiameter) {
  const auto r = route_dimension(desc("E", NormalizedType::radius, 5.0), feature("F", FeatureKind::hole, {{"diameter", 10.0}}));
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->x2d, 5.0);
  EXPECT_DOUBLE_EQ(r->x3d, 5.0);
  EXPECT_EQ(r->param, "diameter/2");
}

TEST(Routing, DiameterNeverRoutesToWidth) {
  EXPECT_FALSE(route_dimension(desc("E", NormalizedType::diameter, 10.0), feature("F", FeatureKind::slot, {{"width", 10.0}})));
}

TEST(Routing, DepthMatchesDepth) {
  const auto r = route_dimension(desc("E", NormalizedType::depth, 12.0), feature("F", FeatureKind::hole, {{"depth", 12.0}}));
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->x3d, 12.0);
  EXPECT_EQ(r->param, "depth");
}

TEST(Routing, WithoutRoutingClosestParameterWins) {
  const auto f = feature("F", FeatureKind::hole, {{"diameter", 6.0}, {"depth", 10.0}});
  const auto r = route_dimension(desc("E", NormalizedType::diameter, 10.0), f, false);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->param, "depth");
}

TEST(DimScore, Bands) {
  EXPECT_DOUBLE_EQ(score_dim(RoutedPair{10.0, 10.05, "d"}, true, 0.1).value, 1.0);
  EXPECT_DOUBLE_EQ(score_dim(RoutedPair{10.0, 10.15, "d"}, true, 0.1).value, 0.7);
  const auto far = score_dim(RoutedPair{10.0, 12.0, "d"}, true, 0.1);
  EXPECT_DOUBLE_EQ(far.value, 0.0);
  EXPECT_TRUE(far.numeric_mismatch);
}

TEST(DimScore, InclusiveEdgesOnGrid) {
  const double eps = 0.1;
  const double deltas[] = {0.0, eps / 2, eps, 1.5 * eps, 2 * eps, 3 * eps};
  const double want[] = {1.0, 1.0, 1.0, 0.7, 0.7, 0.0};
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(score_dim(RoutedPair{25.0, 25.0 + deltas[i], "d"}, true, eps).value, want[i]) << "delta " << deltas[i];
  }
}

TEST(DimScore, NothingToCompare) {
  EXPECT_TRUE(score_dim(std::nullopt, true, 0.1).numeric_mismatch);
  EXPECT_FALSE(score_dim(std::nullopt, false, 0.1).numeric_mismatch);
}

TEST(ContextScore, Cases) {
  auto d = desc("E", NormalizedType::diameter, 10.0);
  EXPECT_DOUBLE_EQ(score_context(d, false), 0.5);
  d.enrich_confidence = 0.92;
  EXPECT_DOUBLE_EQ(score_context(d, true), 0.92);
  d.enrich_confidence = 0.0;
  EXPECT_DOUBLE_EQ(score_context(d, true), 0.0);
}

TEST(Heuristics, DiameterSymbolBonus) {
  auto d = desc("E", NormalizedType::diameter, 10.0);
  d.has_diameter_symbol = true;
  const auto h = apply_heuristics(feature("F", FeatureKind::hole, {{"diameter", 10.0}}), d, PipelineConfig{});
  EXPECT_DOUBLE_EQ(h.h_adjust, 0.1);
  EXPECT_TRUE(h.factors.empty());
}

TEST(Heuristics, MissingSymbolPenalty) {
  const auto h = apply_heuristics(feature("F", FeatureKind::hole, {{"diameter", 10.0}}),
                                  desc("E", NormalizedType::diameter, 10.0), PipelineConfig{});
  ASSERT_EQ(h.factors.size(), 1u);
  EXPECT_DOUBLE_EQ(h.factors[0].second, 0.7);
}

TEST(Heuristics, ThreadOnlyOnCylinders) {
  const auto slot = feature("F", FeatureKind::slot, {{"width", 8.0}});
  auto d = desc("E", NormalizedType::thread, 8.0, "slot");  // target forced so the table alone would pass it
  const auto c = score_pair(slot, d, false, PipelineConfig{}, kTable);
  EXPECT_EQ(c.s_type, 0.0);
  EXPECT_EQ(c.s_final, 0.0);
}

TEST(Heuristics, CapLimitsTotal) {
  PipelineConfig cfg;
  cfg.diameter_symbol_bonus = 0.15;
  cfg.gdt_prior_bonus = 0.15;
  auto d = desc("E", NormalizedType::gdt_position, 0.1);
  d.has_diameter_symbol = true;
  const auto h = apply_heuristics(feature("F", FeatureKind::hole), d, cfg);
  EXPECT_DOUBLE_EQ(h.h_adjust, 0.2);
}

TEST(ScorePair, ExactMatchNoCuesIsPointNine) {
  const auto c = score_pair(feature("F", FeatureKind::hole, {{"diameter", 10.0}}),
                            desc("E", NormalizedType::diameter, 10.0, "hole"), false, fx::no_heuristics(), kTable);
  EXPECT_NEAR(c.s_final, 0.90, 1e-12);
}

TEST(ScorePair, TypeGateZeroesEverything) {
  const auto c = score_pair(feature("F", FeatureKind::fillet, {{"radius", 10.0}}),
                            desc("E", NormalizedType::diameter, 10.0, "hole"), true, PipelineConfig{}, kTable);
  EXPECT_EQ(c.s_final, 0.0);
  EXPECT_EQ(c.trace.back().kind, "final");
}

TEST(ScorePair, MismatchMultipliesAfterSum) {
  const auto c = score_pair(feature("F", FeatureKind::hole, {{"diameter", 10.0}}),
                            desc("E", NormalizedType::diameter, 12.0, "hole"), false, fx::no_heuristics(), kTable);
  EXPECT_TRUE(c.numeric_mismatch);
  EXPECT_NEAR(c.s_final, 0.15, 1e-12);
}

TEST(ScorePair, UnnormalizedWithBonus) {
  auto d = desc("E", NormalizedType::diameter, 10.0, "hole");
  d.has_diameter_symbol = true;
  d.enrich_confidence = 0.9;
  const auto c = score_pair(feature("F", FeatureKind::hole, {{"diameter", 10.0}}), d, true, PipelineConfig{}, kTable);
  EXPECT_NEAR(c.s_final, 1.08, 1e-12);
}

TEST(ScorePair, ContextDisabledDropsTerm) {
  PipelineConfig cfg = ablation_config("no_context");
  cfg.heuristics_enabled = false;
  const auto c = score_pair(feature("F", FeatureKind::hole, {{"diameter", 10.0}}),
                            desc("E", NormalizedType::diameter, 10.0, "hole"), false, cfg, kTable);
  EXPECT_NEAR(c.s_final, 0.80, 1e-12);
}

TEST(ScorePair, TraceReplayReproducesFinal) {
  std::mt19937_64 rng(7);
  const NormalizedType kinds[] = {NormalizedType::diameter, NormalizedType::radius, NormalizedType::depth,
                                  NormalizedType::linear, NormalizedType::thread, NormalizedType::gdt_position};
  const FeatureKind fkinds[] = {FeatureKind::hole, FeatureKind::fillet, FeatureKind::slot, FeatureKind::boss,
                                FeatureKind::pocket, FeatureKind::plane};
  std::uniform_real_distribution<double> val(1.0, 30.0);
  for (int i = 0; i < 500; ++i) {
    auto f = feature("F", fkinds[rng() % 6], {{"diameter", val(rng)}, {"depth", val(rng)}, {"width", val(rng)}});
    auto d = desc("E", kinds[rng() % 6], val(rng));
    d.has_diameter_symbol = rng() % 2;
    d.enrich_confidence = val(rng) / 30.0;
    const auto c = score_pair(f, d, rng() % 2, PipelineConfig{}, kTable);
    EXPECT_DOUBLE_EQ(replay_trace(c.trace), c.s_final);
  }
}

TEST(ScoreAll, FeatureMajorOrder) {
  const std::vector<Feature3D> fs{feature("F1", FeatureKind::hole), feature("F2", FeatureKind::slot)};
  std::vector<DrawingEntity> es{fx::entity("E1", "Ø5"), fx::entity("E2", "10")};
  std::vector<EnrichedDescriptor> ds{enrich_rule_based(es[0]), enrich_rule_based(es[1])};
  const auto all = score_all(fs, es, ds, PipelineConfig{}, kTable);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[1].feature_id, "F1");
  EXPECT_EQ(all[1].entity_id, "E2");
  EXPECT_EQ(all[2].feature_id, "F2");
}

}  // namespace
