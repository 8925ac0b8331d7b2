#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"

using namespace drawmap;

namespace {

TEST(Corpus, Table1Bounds) {
  for (std::uint64_t seed : {1u, 42u, 1000u}) {
    for (const auto& p : generate_synthetic_corpus(seed, 50)) {
      EXPECT_GE(p.inputs.features.size(), 2u) << p.inputs.part_id;
      EXPECT_LE(p.inputs.features.size(), 9u) << p.inputs.part_id;
      EXPECT_GE(p.inputs.entities.size(), 2u) << p.inputs.part_id;
      EXPECT_LE(p.inputs.entities.size(), 13u) << p.inputs.part_id;
    }
  }
}

TEST(Corpus, PartsAreValidAndTruthIsConsistent) {
  for (const auto& p : generate_synthetic_corpus(42, 20)) {
    const auto report = validate_part_inputs(p.inputs.features, p.inputs.entities);
    EXPECT_TRUE(report.admissible()) << p.inputs.part_id;
    UnifiedSpec ids;
    for (const auto& f : p.inputs.features) ids.feature_ids.push_back(f.id);
    for (const auto& e : p.inputs.entities) ids.entity_ids.push_back(e.id);
    EXPECT_TRUE(unknown_truth_ids(ids, p.truth).empty()) << p.inputs.part_id;
  }
}

TEST(Corpus, SeedDeterminesBytes) {
  const auto a = fx::temp_dir("corpus_a"), b = fx::temp_dir("corpus_b");
  write_corpus(a, generate_synthetic_corpus(42, 20), 42, "table1");
  write_corpus(b, generate_synthetic_corpus(42, 20), 42, "table1");
  int files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a);
    EXPECT_EQ(read_text_file(entry.path().string()), read_text_file((std::filesystem::path(b) / rel).string()));
    EXPECT_EQ(read_text_file(entry.path().string()),
              read_text_file((std::filesystem::path(fx::data_dir()) / "ambiguity_corpus" / rel).string()))
        << "bundled corpus drifted from the generator: " << rel;
    ++files;
  }
  EXPECT_EQ(files, 61);
  EXPECT_NE(generate_synthetic_corpus(43, 3)[0].inputs.entities, generate_synthetic_corpus(42, 3)[0].inputs.entities);
}

TEST(Corpus, RoundTrip) {
  const auto dir = fx::temp_dir("corpus_rt");
  const auto parts = generate_synthetic_corpus(5, 4);
  write_corpus(dir, parts, 5, "table1");
  const auto back = load_corpus(dir);
  ASSERT_EQ(back.size(), parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    EXPECT_EQ(back[i].inputs.features, parts[i].inputs.features);
    EXPECT_EQ(back[i].inputs.entities, parts[i].inputs.entities);
    EXPECT_EQ(back[i].truth.links, parts[i].truth.links);
  }
}

TEST(Corpus, UnknownProfile) { EXPECT_THROW(corpus_profile("table9"), InputError); }

TEST(Corpus, DeterministicOnlyFalsePositivesPassTheTypeGate) {
  const auto corpus = load_corpus(fx::data_dir() + "/ambiguity_corpus");
  const auto run = run_corpus(corpus, ablation_config("deterministic_only"), CompatibilityTable::defaults(), {},
                              FixedClock{});
  int false_positives = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& m : run.specs[i].mappings) {
      if (!is_active(m.status) || corpus[i].truth.links.count({m.feature_id, m.entity_id})) continue;
      ++false_positives;
      EXPECT_GT(m.score, 0.0) << m.id;
    }
  }
  EXPECT_GT(false_positives, 0);
}

TEST(Evaluation, JobsDoNotChangeResults) {
  const auto corpus = load_corpus(fx::data_dir() + "/ambiguity_corpus");
  const auto one = run_corpus(corpus, PipelineConfig{}, CompatibilityTable::defaults(), {}, FixedClock{}, 1);
  const auto four = run_corpus(corpus, PipelineConfig{}, CompatibilityTable::defaults(), {}, FixedClock{}, 4);
  EXPECT_EQ(one.specs, four.specs);
  EXPECT_EQ(report_json({one}).dump(), report_json({four}).dump());
}

TEST(Evaluation, AblationOrdering) {
  const auto corpus = load_corpus(fx::data_dir() + "/ambiguity_corpus");
  std::vector<std::string> variants(std::begin(kAblationVariants), std::end(kAblationVariants));
  const auto runs = run_ablation(corpus, variants, {}, CompatibilityTable::defaults(), {}, FixedClock{}, 4);
  ASSERT_EQ(runs.size(), 5u);
  const double full = runs[0].aggregate.f1.mean;
  for (std::size_t i = 1; i < runs.size(); ++i) EXPECT_GT(full, runs[i].aggregate.f1.mean) << runs[i].variant;
  const auto table = format_ablation_table(runs);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
}

}  // namespace
