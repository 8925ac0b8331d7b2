#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace drawmap;

namespace {

PartRun run_near_tie(const EscalationClient* client, const PipelineConfig& cfg = {}) {
  fx::NearTie nt;
  return run_part({"nt", nt.features, nt.entities}, cfg, CompatibilityTable::defaults(), Enricher{}, client,
                  FixedClock{});
}

const MappingRecord* find(const UnifiedSpec& s, const std::string& id) {
  for (const auto& m : s.mappings) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

TEST(Resolve, BracketAllDeterministic) {
  const auto f = fx::load_bracket();
  const auto client = make_mock_client("oracle", f.truth);
  const auto run = run_part({"bracket", f.features.features, f.entities.entities}, PipelineConfig{}, f.table,
                            Enricher{}, client.get(), FixedClock{});
  ASSERT_EQ(run.spec.mappings.size(), 4u);
  for (const auto& m : run.spec.mappings) {
    EXPECT_EQ(m.status, MappingStatus::accepted) << m.id;
    EXPECT_EQ(m.method, MappingMethod::deterministic) << m.id;
  }
  for (const char* id : {"F1~E1", "F2~E2", "F3~E3", "F4~E4"}) EXPECT_TRUE(find(run.spec, id)) << id;
  EXPECT_TRUE(run.spec.unmapped_entities.empty());
  EXPECT_TRUE(run.spec.unconstrained_features.empty());
}

TEST(Resolve, SingletonAboveThresholdIsDeterministic) {
  const std::vector<Feature3D> fs{fx::feature("F1", FeatureKind::hole, {{"diameter", 10.0}})};
  const std::vector<DrawingEntity> es{fx::entity("E1", "Ø10")};
  const auto run = run_part({"p", fs, es}, PipelineConfig{}, CompatibilityTable::defaults(), Enricher{}, nullptr,
                            FixedClock{});
  ASSERT_EQ(run.spec.mappings.size(), 1u);
  EXPECT_EQ(run.spec.mappings[0].method, MappingMethod::deterministic);
  EXPECT_EQ(run.spec.mappings[0].status, MappingStatus::accepted);
}

TEST(Resolve, NearTieGoesToVlm) {
  const auto client = make_mock_client("first_candidate");
  const auto run = run_near_tie(client.get());
  const auto* m = find(run.spec, "F1~E1");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->status, MappingStatus::accepted);
  EXPECT_EQ(m->method, MappingMethod::deterministic_vlm);
  EXPECT_EQ(m->provenance.back().actor, "vlm");
}

TEST(Resolve, BothStagesRejectLeavesFlagged) {
  AlwaysRejectClient client;
  const auto run = run_near_tie(&client);
  ASSERT_EQ(run.spec.mappings.size(), 2u);
  const auto& m = run.spec.mappings[0];
  EXPECT_EQ(m.id, "F1~E1");
  EXPECT_EQ(m.status, MappingStatus::flagged);
  EXPECT_EQ(m.method, MappingMethod::llm);
  EXPECT_GE(m.candidates.size(), 2u);
  for (const auto& c : m.candidates) EXPECT_FALSE(c.trace.empty());
  ASSERT_EQ(run.spec.unmapped_entities.size(), 2u);
  EXPECT_EQ(run.spec.unmapped_entities[0].entity_id, "E1");
  EXPECT_NE(run.spec.unmapped_entities[0].reason.find("policy"), std::string::npos);
}

TEST(Resolve, NoClientFlagsAmbiguity) {
  const auto run = run_near_tie(nullptr);
  EXPECT_EQ(run.spec.count(MappingStatus::flagged), 2u);
}

TEST(Resolve, ArgmaxTakesTop) {
  const auto run = run_near_tie(nullptr, ablation_config("deterministic_only"));
  EXPECT_EQ(run.spec.count(MappingStatus::accepted), 2u);  // one per feature, no mutual exclusion
}

TEST(Resolve, DeterministicPathIsRepeatable) {
  const auto f = fx::load_bracket();
  const auto client = make_mock_client("always_reject");
  auto once = [&] {
    return run_part({"bracket", f.features.features, f.entities.entities}, PipelineConfig{}, f.table,
                    Enricher{}, client.get(), FixedClock{})
        .spec.mappings;
  };
  EXPECT_EQ(once(), once());
}

TEST(Resolve, ParallelEscalationMatchesSerial) {
  const auto corpus = generate_synthetic_corpus(42, 5);
  for (const auto& part : corpus) {
    const auto client = make_mock_client("oracle", part.truth);
    PipelineConfig serial;
    serial.max_in_flight = 1;
    PipelineConfig wide;
    wide.max_in_flight = 8;
    const auto a = run_part(part.inputs, serial, CompatibilityTable::defaults(), Enricher{}, client.get(), FixedClock{});
    const auto b = run_part(part.inputs, wide, CompatibilityTable::defaults(), Enricher{}, client.get(), FixedClock{});
    EXPECT_EQ(a.spec.mappings, b.spec.mappings) << part.inputs.part_id;
  }
}

TEST(Pipeline, RejectsBadConfigAndInputs) {
  PipelineConfig cfg;
  cfg.w_t = 0.9;
  EXPECT_THROW(run_near_tie(nullptr, cfg), InputError);
  const std::vector<Feature3D> dup{fx::feature("F1", FeatureKind::hole), fx::feature("F1", FeatureKind::hole)};
  EXPECT_THROW(run_part({"p", dup, {}}, PipelineConfig{}, CompatibilityTable::defaults(), Enricher{}, nullptr, FixedClock{}),
               InputError);
  EXPECT_THROW(ablation_config("no_such_variant"), InputError);
}

TEST(Pipeline, AblationSnapshots) {
  EXPECT_EQ(ablation_config("no_context").w_c, 0.0);
  EXPECT_FALSE(ablation_config("no_context").context_enabled);
  EXPECT_EQ(ablation_config("deterministic_only").selection_mode, SelectionMode::argmax);
  EXPECT_FALSE(ablation_config("no_heuristics").semantic_routing_enabled);
  EXPECT_TRUE(ablation_config("no_heuristics", {}, false).semantic_routing_enabled);
  const auto run = run_near_tie(nullptr, ablation_config("no_context"));
  EXPECT_EQ(run.spec.config_snapshot.ablation, "no_context");
  EXPECT_EQ(run.spec.config_snapshot.w_c, 0.0);
}

// ---------------------------------------------------------------------------
// Spec emission and review

TEST(Emit, EmptyEntitySetLeavesEverythingUnconstrained) {
  const std::vector<Feature3D> fs{fx::feature("F1", FeatureKind::hole), fx::feature("F2", FeatureKind::slot)};
  const auto spec = emit_proposed_spec("p", {}, fs, {}, PipelineConfig{});
  EXPECT_EQ(spec.unconstrained_features, (std::vector<std::string>{"F1", "F2"}));
  EXPECT_TRUE(spec.unmapped_entities.empty());
}

TEST(Emit, UnknownIdsAreInvariantViolations) {
  MappingRecord r;
  r.id = "F9~E1";
  r.feature_id = "F9";
  r.entity_id = "E1";
  EXPECT_THROW(emit_proposed_spec("p", {r}, {fx::feature("F1", FeatureKind::hole)}, {fx::entity("E1", "Ø5")}, {}),
               InvariantError);
}

TEST(Emit, UnmatchedEntityHasReason) {
  const auto spec = emit_proposed_spec("p", {}, {}, {fx::entity("E1", "DEBURR", EntityType::note)}, {});
  ASSERT_EQ(spec.unmapped_entities.size(), 1u);
  EXPECT_EQ(spec.unmapped_entities[0].reason, "no candidate");
  EXPECT_TRUE(exhaustiveness_violations(spec).empty());
}

class Review : public ::testing::Test {
 protected:
  UnifiedSpec flagged_spec() {
    AlwaysRejectClient client;
    return run_near_tie(&client).spec;
  }
  FixedClock clock{"2026-01-02T03:04:05Z"};
};

TEST_F(Review, AcceptFlaggedRecordsHumanEvent) {
  const auto spec = flagged_spec();
  const auto next = apply_review_decisions(spec, {{"F1~E1", ReviewAction::accept, std::nullopt, "ana", "checked"}}, clock);
  const auto* m = find(next, "F1~E1");
  EXPECT_EQ(m->status, MappingStatus::accepted);
  EXPECT_EQ(m->method, MappingMethod::human);
  EXPECT_EQ(m->provenance.back().actor, "human:ana");
  EXPECT_EQ(m->provenance.back().timestamp, "2026-01-02T03:04:05Z");
  EXPECT_EQ(next.revision, spec.revision + 1);
  ASSERT_EQ(next.unmapped_entities.size(), 1u);
  EXPECT_EQ(next.unmapped_entities[0].entity_id, "E2");
}

TEST_F(Review, EditRetargets) {
  const auto spec = flagged_spec();
  const auto next = apply_review_decisions(spec, {{"F1~E1", ReviewAction::edit, "F2", "ana", "leader points right"}}, clock);
  const auto* m = find(next, "F2~E1");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->status, MappingStatus::human_edited);
  EXPECT_EQ(m->method, MappingMethod::human);
  EXPECT_EQ(m->provenance.back().stage, "review");
  EXPECT_FALSE(find(next, "F1~E1"));
}

TEST_F(Review, ApproveRefusedWhileFlagged) {
  try {
    apply_review_decisions(flagged_spec(), {{"", ReviewAction::approve, std::nullopt, "ana", ""}}, clock);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::refused);
  }
}

TEST_F(Review, RejectThenApprove) {
  auto spec = apply_review_decisions(flagged_spec(),
                                     {{"F1~E1", ReviewAction::reject, std::nullopt, "ana", "wrong"},
                                      {"F1~E2", ReviewAction::reject, std::nullopt, "ana", "wrong too"}},
                                     clock);
  ASSERT_EQ(spec.unmapped_entities.size(), 2u);
  EXPECT_EQ(spec.unmapped_entities[0].reason, "rejected: wrong");
  spec = apply_review_decisions(spec, {{"", ReviewAction::approve, std::nullopt, "ana", ""}}, clock);
  ASSERT_TRUE(spec.approval);
  EXPECT_EQ(spec.approval->timestamp, "2026-01-02T03:04:05Z");
}

TEST_F(Review, AcceptAllThenApprove) {
  const auto f = fx::load_bracket();
  auto spec = run_part({"bracket", f.features.features, f.entities.entities}, PipelineConfig{}, f.table, Enricher{},
                       nullptr, FixedClock{})
                  .spec;
  std::vector<ReviewDecision> all;
  for (const auto& m : spec.mappings) all.push_back({m.id, ReviewAction::accept, std::nullopt, "ana", ""});
  all.push_back({"", ReviewAction::approve, std::nullopt, "ana", ""});
  spec = apply_review_decisions(spec, all, clock);
  EXPECT_TRUE(spec.approval);
  EXPECT_EQ(spec.revision, 1);
}

TEST_F(Review, AllOrNothingAndConflicts) {
  const auto spec = flagged_spec();
  EXPECT_THROW(apply_review_decisions(spec,
                                      {{"F1~E1", ReviewAction::accept, std::nullopt, "ana", ""},
                                       {"nope", ReviewAction::accept, std::nullopt, "ana", ""}},
                                      clock),
               ReviewError);
  auto approved = apply_review_decisions(spec, {{"F1~E1", ReviewAction::accept, std::nullopt, "ana", ""},
                                                {"F1~E2", ReviewAction::edit, "F2", "ana", ""},
                                                {"", ReviewAction::approve, std::nullopt, "ana", ""}},
                                         clock);
  try {
    apply_review_decisions(approved, {{"F1~E1", ReviewAction::reject, std::nullopt, "ana", ""}}, clock);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::conflict);
  }
}

TEST_F(Review, EditToUnknownFeatureIsValidationError) {
  try {
    apply_review_decisions(flagged_spec(), {{"F1~E1", ReviewAction::edit, "F77", "ana", ""}}, clock);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::unknown_id);
  }
}

}  // namespace
