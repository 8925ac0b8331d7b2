#pragma once
// Seeded synthetic parts with ground truth. Each part is assembled from
// motifs that stress one mapping difficulty each:
//
//   counterbore   one hole, separate diameter and depth callouts (always present)
//   pattern       k identical holes, one "kX" callout
//   twin          two holes within epsilon of each other, one callout each
//   slot          width and length as bare linear dimensions
//   fillet        "R" callout; radius may coincide with a hole diameter
//   thread        "M" callout on a threaded hole
//   datum plane   plane with a datum letter
//   flat plane    plane with a flatness frame (at most one frame per part)
//   decoy         undimensioned hole or fillet repeating a callout value
//   lookalike     undimensioned hole with the counterbore's diameter
//   note          free text that names no feature
//
// Feature counts follow the table1 profile: 2-9 features, at most 13 entities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drawmap/core.hpp"
#include "drawmap/pipeline.hpp"
#include "drawmap/serialization.hpp"

namespace drawmap {

struct CorpusPart {
  PartInputs inputs;
  GroundTruth truth;
};

struct CorpusProfile {
  std::string name = "table1";
  int min_features = 2;
  int max_features = 9;
  int max_entities = 13;
};

inline CorpusProfile corpus_profile(const std::string& name) {
  if (name == "table1") return {};
  throw InputError("unknown corpus profile '" + name + "'");
}

namespace corpus_detail {

/// Raw 64-bit engine output only, so streams match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  bool chance(int percent) { return below(100) < static_cast<std::uint64_t>(percent); }

 private:
  std::mt19937_64 engine_;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  std::string s = os.str();
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

inline constexpr double kSeparation = 0.3;  // three tolerance bands

class PartBuilder {
 public:
  PartBuilder(Rng& rng, std::string part_id) : rng_(rng) {
    part_.inputs.part_id = part_id;
    part_.truth.part_id = std::move(part_id);
  }

  int features() const { return static_cast<int>(part_.inputs.features.size()); }
  int entities() const { return static_cast<int>(part_.inputs.entities.size()); }

  /// A value on a 0.5 mm grid in [lo, hi] that keeps clear of every value used so far.
  double fresh(double lo, double hi) {
    const int steps = static_cast<int>((hi - lo) / 0.5);
    for (int tries = 0; tries < 200; ++tries) {
      const double v = lo + 0.5 * rng_.between(0, steps);
      if (is_clear(v)) {
        used_.push_back(v);
        return v;
      }
    }
    // grid exhausted: fall back to an off-grid value past hi
    double v = hi + 0.7;
    while (!is_clear(v)) v += 0.7;
    used_.push_back(v);
    return v;
  }

  bool is_clear(double v) const {
    return std::none_of(used_.begin(), used_.end(), [&](double u) { return std::abs(u - v) < kSeparation; });
  }
  void reserve(double v) { used_.push_back(v); }

  std::string feature(const std::string& type, std::map<std::string, double> params,
                      std::optional<std::string> pattern = std::nullopt) {
    Feature3D f;
    f.id = "F" + std::to_string(++feature_seq_);
    f.feature_type = FeatureType::parse(type);
    f.params = std::move(params);
    f.afr_confidence = 0.80 + 0.01 * rng_.between(0, 19);
    f.metadata.pattern_id = std::move(pattern);
    f.centroid = Vec3{static_cast<double>(rng_.between(0, 200)), static_cast<double>(rng_.between(0, 120)),
                      static_cast<double>(rng_.between(0, 40))};
    part_.inputs.features.push_back(f);
    return f.id;
  }

  std::string entity(EntityType type, const std::string& raw, std::map<std::string, SemanticValue> values) {
    DrawingEntity e;
    e.id = "E" + std::to_string(++entity_seq_);
    e.entity_type = type;
    e.raw_text = raw;
    e.semantic_values = std::move(values);
    const double x = rng_.between(0, 380), y = rng_.between(0, 260);
    e.context.bbox = Box2{x, y, x + 8.0 + 2.0 * static_cast<double>(raw.size()), y + 10.0};
    e.context.view = kViews[rng_.below(3)];
    part_.inputs.entities.push_back(e);
    return e.id;
  }

  void link(const std::string& f, const std::string& e) { part_.truth.links.emplace(f, e); }

  CorpusPart take() { return std::move(part_); }

 private:
  static constexpr const char* kViews[] = {"front", "top", "side"};
  Rng& rng_;
  CorpusPart part_;
  std::vector<double> used_;
  int feature_seq_ = 0;
  int entity_seq_ = 0;
};

inline std::map<std::string, SemanticValue> dim_values(double v, const char* kind) {
  return {{"value", v}, {"unit", std::string("mm")}, {"dim_kind", std::string(kind)}};
}

enum class Motif { pattern, twin, slot, fillet, thread, datum_plane, flat_plane, decoy, lookalike };

struct MotifSpec {
  Motif motif;
  int weight;
  int features;
  int entities;
};

inline constexpr MotifSpec kMotifs[] = {
    {Motif::pattern, 3, 2, 1},     {Motif::twin, 2, 2, 2},        {Motif::slot, 3, 1, 2},
    {Motif::fillet, 2, 1, 1},      {Motif::thread, 1, 1, 1},      {Motif::datum_plane, 1, 1, 1},
    {Motif::flat_plane, 1, 1, 1},  {Motif::decoy, 5, 1, 0},       {Motif::lookalike, 1, 1, 0},
};

class PartGenerator {
 public:
  PartGenerator(Rng& rng, const CorpusProfile& profile, std::string part_id)
      : rng_(rng), profile_(profile), b_(rng, std::move(part_id)) {}

  CorpusPart run() {
    const int target = rng_.between(profile_.min_features, profile_.max_features);
    counterbore();
    while (b_.features() < target) {
      const auto pick = choose(target - b_.features(), profile_.max_entities - b_.entities());
      if (!pick) break;
      emit(*pick, target - b_.features());
    }
    if (b_.features() < profile_.min_features) decoy_or_plain();
    if (b_.entities() < profile_.max_entities && rng_.chance(40)) note();
    return b_.take();
  }

 private:
  Rng& rng_;
  const CorpusProfile& profile_;
  PartBuilder b_;
  std::vector<double> diameter_values_;  // callout values a decoy may repeat
  std::vector<double> linear_values_;
  bool has_lookalike_ = false;
  std::optional<double> counterbore_diameter_;
  bool has_frame_ = false;
  int pattern_seq_ = 0;
  int datum_seq_ = 0;

  bool allowed(const MotifSpec& m, int features_left, int entities_left) const {
    if (m.features > features_left || m.entities > entities_left) return false;
    if (m.motif == Motif::flat_plane && has_frame_) return false;
    if (m.motif == Motif::decoy && diameter_values_.empty() && linear_values_.empty()) return false;
    if (m.motif == Motif::lookalike && (!counterbore_diameter_ || has_lookalike_)) return false;
    return true;
  }

  std::optional<Motif> choose(int features_left, int entities_left) {
    int total = 0;
    for (const auto& m : kMotifs) total += allowed(m, features_left, entities_left) ? m.weight : 0;
    if (total == 0) return std::nullopt;
    int r = static_cast<int>(rng_.below(static_cast<std::uint64_t>(total)));
    for (const auto& m : kMotifs) {
      if (!allowed(m, features_left, entities_left)) continue;
      if (r < m.weight) return m.motif;
      r -= m.weight;
    }
    return std::nullopt;
  }

  void emit(Motif m, int features_left) {
    switch (m) {
      case Motif::pattern: pattern(std::min(features_left, rng_.between(2, 4))); break;
      case Motif::twin: twin(); break;
      case Motif::slot: slot(); break;
      case Motif::fillet: fillet(); break;
      case Motif::thread: thread(); break;
      case Motif::datum_plane: plane_with_datum(); break;
      case Motif::flat_plane: plane_with_flatness(); break;
      case Motif::decoy: decoy(); break;
      case Motif::lookalike: lookalike(); break;
    }
  }

  void counterbore() {
    const double d = b_.fresh(4.0, 20.0);
    const double depth = b_.fresh(5.0, 30.0);
    const double cb = b_.fresh(d + 3.0, d + 12.0);
    const auto f = b_.feature("hole", {{"diameter", d}, {"depth", depth}, {"counterbore_diameter", cb}});
    const auto e1 = b_.entity(EntityType::dimension, "Ø" + fmt(d), dim_values(d, "diameter"));
    const auto e2 = b_.entity(EntityType::dimension, "↧" + fmt(depth), dim_values(depth, "depth"));
    b_.link(f, e1);
    b_.link(f, e2);
    diameter_values_.push_back(d);
    counterbore_diameter_ = d;
  }

  void pattern(int k) {
    const double d = b_.fresh(3.0, 16.0);
    const double depth = b_.fresh(4.0, 25.0);
    const std::string pid = "P" + std::to_string(++pattern_seq_);
    std::vector<std::string> holes;
    for (int i = 0; i < k; ++i) holes.push_back(b_.feature("hole", {{"diameter", d}, {"depth", depth}}, pid));
    std::map<std::string, SemanticValue> values = dim_values(d, "diameter");
    values["multiplicity"] = static_cast<double>(k);
    const auto e = b_.entity(EntityType::dimension, std::to_string(k) + "X Ø" + fmt(d) + " THRU", values);
    for (const auto& h : holes) b_.link(h, e);
    diameter_values_.push_back(d);
  }

  void twin() {
    const double d = b_.fresh(5.0, 24.0);
    const double d2 = d + 0.05;
    const auto fa = b_.feature("hole", {{"diameter", d}, {"depth", b_.fresh(5.0, 30.0)}});
    const auto fb = b_.feature("hole", {{"diameter", d2}, {"depth", b_.fresh(5.0, 30.0)}});
    const auto ea = b_.entity(EntityType::dimension, "Ø" + fmt(d), dim_values(d, "diameter"));
    const auto eb = b_.entity(EntityType::dimension, "Ø" + fmt(d2), dim_values(d2, "diameter"));
    b_.link(fa, ea);
    b_.link(fb, eb);
  }

  void slot() {
    const double w = b_.fresh(4.0, 20.0);
    const double len = b_.fresh(20.0, 80.0);
    const auto f = b_.feature("slot", {{"width", w}, {"length", len}, {"depth", b_.fresh(3.0, 15.0)}});
    const auto ew = b_.entity(EntityType::dimension, fmt(w), dim_values(w, "linear"));
    const auto el = b_.entity(EntityType::dimension, fmt(len), dim_values(len, "linear"));
    b_.link(f, ew);
    b_.link(f, el);
    linear_values_.push_back(w);
    linear_values_.push_back(len);
  }

  void fillet() {
    double r;
    if (counterbore_diameter_ && rng_.chance(50)) {
      r = *counterbore_diameter_;  // numerically equal to a hole diameter, different type
    } else {
      r = b_.fresh(1.0, 12.0);
    }
    const auto f = b_.feature("fillet", {{"radius", r}});
    const auto e = b_.entity(EntityType::dimension, "R" + fmt(r), dim_values(r, "radius"));
    b_.link(f, e);
  }

  void thread() {
    static constexpr double kSizes[] = {3, 4, 5, 6, 8, 10, 12, 16, 20};
    static constexpr double kPitch[] = {0.5, 0.7, 0.8, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5};
    std::vector<int> open;
    for (int i = 0; i < 9; ++i) {
      if (b_.is_clear(kSizes[i])) open.push_back(i);
    }
    if (open.empty()) {
      fillet();
      return;
    }
    const int i = open[rng_.below(open.size())];
    b_.reserve(kSizes[i]);
    const auto f = b_.feature("thread_hole", {{"diameter", kSizes[i]}, {"depth", b_.fresh(6.0, 30.0)}});
    const auto e = b_.entity(EntityType::thread_callout, "M" + fmt(kSizes[i]) + "x" + fmt(kPitch[i]),
                             {{"value", kSizes[i]}, {"unit", std::string("mm")}, {"dim_kind", std::string("thread")}});
    b_.link(f, e);
  }

  void plane_with_datum() {
    const auto f = b_.feature("plane", {{"width", b_.fresh(30.0, 120.0)}, {"length", b_.fresh(30.0, 120.0)}});
    const std::string letter(1, static_cast<char>('A' + datum_seq_++));
    const auto e = b_.entity(EntityType::datum, letter, {{"target", std::string("plane")}});
    b_.link(f, e);
  }

  void plane_with_flatness() {
    has_frame_ = true;
    const auto f = b_.feature("plane", {{"width", b_.fresh(30.0, 120.0)}, {"length", b_.fresh(30.0, 120.0)}});
    const auto e = b_.entity(EntityType::gdt_frame, "⏥ 0.05", {{"target", std::string("plane")}});
    b_.link(f, e);
  }

  /// Undimensioned feature with a parameter that repeats a diameter or linear
  /// callout value under a different parameter name. Only type-aware routing
  /// keeps that callout off it.
  void decoy() {
    const std::size_t n_dia = diameter_values_.size();
    const std::size_t pick = rng_.below(n_dia + linear_values_.size());
    if (pick < n_dia) {
      b_.feature("hole", {{"diameter", b_.fresh(3.0, 24.0)}, {"depth", diameter_values_[pick]}});
      return;
    }
    const double v = linear_values_[pick - n_dia];
    switch (rng_.below(3)) {
      case 0: b_.feature("hole", {{"diameter", b_.fresh(3.0, 24.0)}, {"depth", v}}); break;
      case 1: b_.feature("hole", {{"diameter", v}, {"depth", b_.fresh(5.0, 30.0)}}); break;
      default: b_.feature("fillet", {{"radius", v}}); break;
    }
  }

  /// Undimensioned hole with exactly the counterbore's diameter.
  void lookalike() {
    has_lookalike_ = true;
    b_.feature("hole", {{"diameter", *counterbore_diameter_}, {"depth", b_.fresh(5.0, 30.0)}});
  }

  void decoy_or_plain() {
    if (!diameter_values_.empty()) {
      decoy();
    } else {
      b_.feature("chamfer", {{"width", b_.fresh(0.5, 3.0)}});
    }
  }

  void note() {
    static constexpr const char* kNotes[] = {"BREAK ALL SHARP EDGES", "DEBURR", "REMOVE ALL BURRS",
                                             "FINISH: ANODIZE BLACK"};
    b_.entity(EntityType::note, kNotes[rng_.below(4)], {});
  }
};

}  // namespace corpus_detail

inline std::string part_name(int index) {
  std::ostringstream os;
  os << "part_" << std::setw(3) << std::setfill('0') << index;
  return os.str();
}

inline std::vector<CorpusPart> generate_synthetic_corpus(std::uint64_t seed, int n_parts,
                                                         const CorpusProfile& profile = {}) {
  corpus_detail::Rng rng(seed);
  std::vector<CorpusPart> parts;
  parts.reserve(static_cast<std::size_t>(std::max(0, n_parts)));
  for (int i = 1; i <= n_parts; ++i) {
    parts.push_back(corpus_detail::PartGenerator(rng, profile, part_name(i)).run());
  }
  return parts;
}

// ---------------------------------------------------------------------------
// On-disk layout: <dir>/manifest.json and <dir>/<part>/{features,entities,truth}.json

inline void write_corpus(const std::string& dir, const std::vector<CorpusPart>& parts, std::uint64_t seed,
                         const std::string& profile) {
  Json ids = Json::array();
  for (const auto& p : parts) {
    const std::string base = dir + "/" + p.inputs.part_id + "/";
    write_file_atomic(base + "features.json", dump(Json(FeaturesFile{p.inputs.part_id, p.inputs.features})));
    write_file_atomic(base + "entities.json", dump(Json(EntitiesFile{p.inputs.part_id, p.inputs.entities})));
    write_file_atomic(base + "truth.json", dump(Json(p.truth)));
    ids.push_back(p.inputs.part_id);
  }
  write_file_atomic(dir + "/manifest.json",
                    dump(Json{{"seed", seed}, {"profile", profile}, {"parts", ids}}));
}

inline std::vector<CorpusPart> load_corpus(const std::string& dir) {
  const Json manifest = parse_json_text(read_text_file(dir + "/manifest.json"), dir + "/manifest.json");
  std::vector<CorpusPart> parts;
  for (const auto& id : manifest.at("parts")) {
    const std::string base = dir + "/" + id.get<std::string>() + "/";
    CorpusPart p;
    auto features = load_json_file<FeaturesFile>(base + "features.json");
    auto entities = load_json_file<EntitiesFile>(base + "entities.json");
    p.inputs = {id.get<std::string>(), std::move(features.features), std::move(entities.entities)};
    p.truth = load_json_file<GroundTruth>(base + "truth.json");
    parts.push_back(std::move(p));
  }
  return parts;
}

}  // namespace drawmap
