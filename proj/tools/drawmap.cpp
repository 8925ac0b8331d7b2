// drawmap command-line front end: map, eval, gen, validate, serve.
// Exit codes: 0 ok, 2 bad input, 3 internal invariant failure.

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "drawmap/drawmap.hpp"
#include "drawmap/http_transport.hpp"
#include "drawmap/review_server.hpp"
#include "drawmap/run_config.hpp"

namespace {

using namespace drawmap;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void emit(const std::string& out_path, const Json& doc) {
  if (out_path.empty() || out_path == "-") {
    std::cout << dump(doc);
  } else {
    write_file_atomic(out_path, dump(doc));
  }
}

// ---------------------------------------------------------------------------

struct MapArgs {
  std::string features, entities, config, out, truth, script, compat, store, now;
  std::string policy = "always_reject";
  std::string ablate = "full";
  bool online = false;
  bool keep_routing = false;
};

int cmd_map(const MapArgs& a) {
  RunConfig rc = load_run_config(a.config);
  PipelineConfig cfg = ablation_config(a.ablate, rc.pipeline, !a.keep_routing);
  const CompatibilityTable table = load_compatibility(a.compat);

  const auto features = load_json_file<FeaturesFile>(a.features);
  const auto entities = load_json_file<EntitiesFile>(a.entities);
  std::string part_id = !entities.part_id.empty() ? entities.part_id : features.part_id;
  if (part_id.empty()) part_id = std::filesystem::path(a.entities).parent_path().filename().string();
  if (part_id.empty()) part_id = "part";
  if (!features.part_id.empty() && !entities.part_id.empty() && features.part_id != entities.part_id) {
    throw InputError("part_id differs between " + a.features + " and " + a.entities);
  }

  std::optional<GroundTruth> truth;
  if (!a.truth.empty()) truth = load_json_file<GroundTruth>(a.truth);

  std::unique_ptr<Enricher> enricher;
  std::unique_ptr<EscalationClient> client;
  std::unique_ptr<Clock> clock;
  if (a.online) {
    if (rc.escalation.endpoint.empty()) throw InputError("--online needs escalation.endpoint in --config");
    const auto key = credential_from_env(rc.escalation.credential_env);
    if (!key) throw InputError("--online needs the " + rc.escalation.credential_env + " environment variable");
    client = std::make_unique<TransportEscalationClient>(
        std::make_shared<HttpTransport>(rc.escalation.endpoint, key, rc.escalation.timeout_ms));
    std::shared_ptr<JsonTransport> enrich_transport;
    if (rc.enricher.kind == EnricherKind::external_vlm) {
      enrich_transport = std::make_shared<HttpTransport>(rc.enricher.endpoint,
                                                         credential_from_env(rc.enricher.credential_env),
                                                         rc.enricher.timeout_ms);
    }
    enricher = std::make_unique<Enricher>(rc.enricher, cfg, enrich_transport);
    clock = a.now.empty() ? std::unique_ptr<Clock>(std::make_unique<SystemClock>())
                          : std::make_unique<FixedClock>(a.now);
  } else {
    enricher = std::make_unique<Enricher>(EnricherBackend{}, cfg);
    client = make_mock_client(a.policy, truth, a.script);
    clock = a.now.empty() ? std::make_unique<FixedClock>() : std::make_unique<FixedClock>(a.now);
  }

  PartRun run = run_part({part_id, features.features, entities.entities}, cfg, table, *enricher, client.get(), *clock);
  for (const auto& w : run.warnings) std::cerr << "warning: " << describe(w) << "\n";

  emit(a.out, Json(run.spec));
  if (!a.store.empty()) {
    SpecStore store(a.store);
    store.publish(part_id, run.spec);
  }
  std::cerr << part_id << ": " << run.spec.count(MappingStatus::accepted) << " accepted, "
            << run.spec.count(MappingStatus::flagged) << " flagged, " << run.spec.unmapped_entities.size()
            << " unmapped\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string spec, truth, corpus, config, compat, out, script, ablate;
  std::string policy = "oracle";
  int jobs = 1;
  bool keep_routing = false;
};

int cmd_eval(const EvalArgs& a) {
  if (!a.corpus.empty()) {
    const RunConfig rc = load_run_config(a.config);
    const auto corpus = load_corpus(a.corpus);
    const CompatibilityTable table = load_compatibility(a.compat);
    std::vector<std::string> variants;
    if (a.ablate.empty()) {
      variants = {rc.pipeline.ablation};
    } else if (a.ablate == "all") {
      variants.assign(std::begin(kAblationVariants), std::end(kAblationVariants));
    } else {
      variants = split_list(a.ablate);
    }
    const FixedClock clock;
    const auto runs = run_ablation(corpus, variants, rc.pipeline, table, {a.policy, a.script}, clock,
                                   std::max(1, a.jobs), !a.keep_routing);
    if (runs.size() == 1) {
      std::cout << format_summary_table(runs.front().aggregate);
    } else {
      std::cout << format_ablation_table(runs);
    }
    if (!a.out.empty()) write_file_atomic(a.out, dump(report_json(runs)));
    return kExitOk;
  }

  if (a.spec.empty() || a.truth.empty()) throw InputError("eval needs --spec and --truth, or --corpus");
  const auto spec = load_json_file<UnifiedSpec>(a.spec);
  const auto truth = load_json_file<GroundTruth>(a.truth);
  if (!truth.part_id.empty() && truth.part_id != spec.part_id) {
    throw InputError("part_id mismatch: spec " + spec.part_id + ", truth " + truth.part_id);
  }
  if (const auto unknown = unknown_truth_ids(spec, truth); !unknown.empty()) {
    std::string msg = "truth references ids absent from the spec:";
    for (const auto& id : unknown) msg += " " + id;
    throw InputError(msg);
  }
  const PartMetrics m = compute_metrics(spec, truth);
  std::cout << format_summary_table(macro_average({m}));
  emit(a.out.empty() ? "-" : a.out, Json(m));
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_gen(std::uint64_t seed, int parts, const std::string& profile, const std::string& out) {
  if (parts < 0) throw InputError("--parts must be >= 0");
  const auto corpus = generate_synthetic_corpus(seed, parts, corpus_profile(profile));
  try {
    write_corpus(out, corpus, seed, profile);
  } catch (const std::filesystem::filesystem_error& err) {
    throw InputError(out + ": " + err.what());
  }
  std::cerr << "wrote " << corpus.size() << " parts to " << out << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& features_path, const std::string& entities_path) {
  const auto features = load_json_file<FeaturesFile>(features_path);
  const auto entities = load_json_file<EntitiesFile>(entities_path);
  const ValidationReport r = validate_part_inputs(features.features, entities.entities);
  std::cout << dump(validation_report_json(r));
  return r.admissible() ? kExitOk : kExitInput;
}

int cmd_serve(const std::string& store_dir, const std::string& host, int port, const std::string& ui_dir) {
  SpecStore store(store_dir);
  const SystemClock clock;
  ReviewService service(store, clock);
  httplib::Server server;
  if (!ui_dir.empty() && !std::filesystem::is_directory(ui_dir)) throw InputError(ui_dir + ": not a directory");
  bind_review_routes(server, service, ui_dir);
  if (!server.bind_to_port(host, port)) throw InputError("cannot bind " + host + ":" + std::to_string(port));
  std::cerr << "review service on http://" << host << ":" << port << " (store " << store_dir << ")\n";
  server.listen_after_bind();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map 2D drawing callouts to 3D features"};
  app.require_subcommand(1);

  MapArgs map;
  auto* map_cmd = app.add_subcommand("map", "Produce a proposed specification for one part");
  map_cmd->add_option("--features", map.features, "features.json")->required();
  map_cmd->add_option("--entities", map.entities, "entities.json")->required();
  map_cmd->add_option("--config", map.config, "Run config JSON");
  map_cmd->add_option("--out", map.out, "Output spec path (stdout if omitted)");
  map_cmd->add_flag("--offline", "Rule-based enricher and mock escalation (default)");
  map_cmd->add_flag("--online", map.online, "Use the remote endpoints from --config");
  map_cmd->add_option("--escalation-policy", map.policy, "oracle|first_candidate|always_reject|scripted");
  map_cmd->add_option("--truth", map.truth, "Ground truth for the oracle policy");
  map_cmd->add_option("--script", map.script, "Scripted responses (NDJSON)");
  map_cmd->add_option("--ablate", map.ablate, "Ablation variant");
  map_cmd->add_option("--compat", map.compat, "Compatibility table JSON");
  map_cmd->add_option("--now", map.now, "Timestamp written into provenance");
  map_cmd->add_option("--store", map.store, "Also publish into this review store");
  map_cmd->add_flag("--keep-routing", map.keep_routing, "no_heuristics keeps dimension routing");
  map_cmd->get_option("--online")->excludes("--offline");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a spec against truth, or run a corpus");
  eval_cmd->add_option("--spec", eval.spec, "Spec to score");
  eval_cmd->add_option("--truth", eval.truth, "Ground truth");
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus directory");
  eval_cmd->add_option("--ablate", eval.ablate, "all, or a comma list of variants");
  eval_cmd->add_option("--config", eval.config, "Run config JSON");
  eval_cmd->add_option("--compat", eval.compat, "Compatibility table JSON");
  eval_cmd->add_option("--escalation-policy", eval.policy, "Mock policy for corpus runs");
  eval_cmd->add_option("--script", eval.script, "Scripted responses (NDJSON)");
  eval_cmd->add_option("--jobs", eval.jobs, "Parts in parallel");
  eval_cmd->add_option("--out", eval.out, "Report JSON path");
  eval_cmd->add_flag("--keep-routing", eval.keep_routing, "no_heuristics keeps dimension routing");

  std::uint64_t seed = 42;
  int parts = 20;
  std::string profile = "table1", gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic corpus");
  gen_cmd->add_option("--seed", seed);
  gen_cmd->add_option("--parts", parts);
  gen_cmd->add_option("--profile", profile);
  gen_cmd->add_option("--out", gen_out)->required();

  std::string v_features, v_entities;
  auto* val_cmd = app.add_subcommand("validate", "Check input files");
  val_cmd->add_option("--features", v_features)->required();
  val_cmd->add_option("--entities", v_entities)->required();

  std::string store_dir, host = "127.0.0.1", ui_dir;
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the review service");
  serve_cmd->add_option("--store", store_dir)->required();
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--ui", ui_dir, "Static review UI bundle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*map_cmd) return cmd_map(map);
    if (*eval_cmd) return cmd_eval(eval);
    if (*gen_cmd) return cmd_gen(seed, parts, profile, gen_out);
    if (*val_cmd) return cmd_validate(v_features, v_entities);
    if (*serve_cmd) return cmd_serve(store_dir, host, port, ui_dir);
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ReviewError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitInput;
}
