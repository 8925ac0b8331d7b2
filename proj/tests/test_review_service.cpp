#include <gtest/gtest.h>

#include <thread>

#include "drawmap/http_transport.hpp"
#include "drawmap/review_server.hpp"
#include "fixtures.hpp"

using namespace drawmap;

namespace {

UnifiedSpec flagged_spec() {
  fx::NearTie nt;
  AlwaysRejectClient client;
  return run_part({"nt", nt.features, nt.entities}, PipelineConfig{}, CompatibilityTable::defaults(), Enricher{},
                  &client, FixedClock{})
      .spec;
}

class Service : public ::testing::Test {
 protected:
  Service() : store(fx::temp_dir("store_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()))),
              service(store, clock) {}
  FixedClock clock{"2026-03-04T05:06:07Z"};
  SpecStore store;
  ReviewService service;
};

TEST_F(Service, EmptyStoreListsNothing) {
  const auto r = service.list();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, Json::array());
}

TEST_F(Service, SummaryCountsFlagged) {
  store.publish("nt", flagged_spec());
  const auto r = service.list();
  ASSERT_EQ(r.body.size(), 1u);
  EXPECT_EQ(r.body[0]["id"], "nt");
  EXPECT_EQ(r.body[0]["flagged"], 2);
  EXPECT_EQ(r.body[0]["unmapped"], 2);
  EXPECT_TRUE(r.body[0]["approval"].is_null());
}

TEST_F(Service, GetCarriesCandidateTraces) {
  store.publish("nt", flagged_spec());
  const auto r = service.get("nt");
  ASSERT_EQ(r.status, 200);
  const auto spec = r.body.get<UnifiedSpec>();
  EXPECT_EQ(spec, flagged_spec());
  EXPECT_GE(spec.mappings[0].candidates.size(), 2u);
  EXPECT_FALSE(spec.mappings[0].candidates[0].trace.empty());
  EXPECT_EQ(service.get("missing").status, 404);
  EXPECT_EQ(service.get("../etc").status, 404);
}

TEST_F(Service, AcceptByEntityAddsHumanEventAndPersists) {
  store.publish("nt", flagged_spec());
  const auto r = service.decide("nt", R"({"revision": 0, "entity_id": "E2", "action": "accept", "rationale": "ok"})", "ana");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto spec = r.body.get<UnifiedSpec>();
  EXPECT_EQ(spec.revision, 1);
  const auto& m = spec.mappings[1];
  EXPECT_EQ(m.id, "F1~E2");
  EXPECT_EQ(m.status, MappingStatus::accepted);
  EXPECT_EQ(m.provenance.back().actor, "human:ana");
  EXPECT_EQ(store.history("nt").size(), 2u);
  EXPECT_EQ(store.load("nt")->revision, 1);
}

TEST_F(Service, StaleRevisionConflicts) {
  store.publish("nt", flagged_spec());
  ASSERT_EQ(service.decide("nt", R"({"revision": 0, "mapping_id": "F1~E1", "action": "accept"})", "ana").status, 200);
  const auto r = service.decide("nt", R"({"revision": 0, "mapping_id": "F1~E2", "action": "accept"})", "bo");
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["error"], "conflict");
}

TEST_F(Service, RejectThenApprove) {
  store.publish("nt", flagged_spec());
  auto r = service.decide("nt",
                          R"({"revision": 0, "decisions": [
                                {"mapping_id": "F1~E1", "action": "reject", "rationale": "no"},
                                {"mapping_id": "F1~E2", "action": "reject", "rationale": "no"}]})",
                          "ana");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["unmapped_entities"].size(), 2u);
  r = service.approve("nt", R"({"revision": 1})", "ana");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["approval"]["reviewer"], "ana");
  EXPECT_EQ(r.body["approval"]["timestamp"], "2026-03-04T05:06:07Z");
  const auto list = service.list();
  EXPECT_EQ(list.body[0]["approval"]["reviewer"], "ana");
  // decisions after approval conflict
  EXPECT_EQ(service.decide("nt", R"({"revision": 2, "mapping_id": "F1~E1", "action": "accept"})", "ana").status, 409);
}

TEST_F(Service, ApproveRefusedWhileFlagged) {
  store.publish("nt", flagged_spec());
  const auto r = service.approve("nt", R"({"revision": 0})", "ana");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"], "refused");
  EXPECT_EQ(store.history("nt").size(), 1u);
}

TEST_F(Service, BadRequests) {
  store.publish("nt", flagged_spec());
  EXPECT_EQ(service.decide("nt", "{", "ana").status, 400);
  EXPECT_EQ(service.decide("nt", R"({"mapping_id": "F1~E1", "action": "accept"})", "ana").status, 400);
  EXPECT_EQ(service.decide("nt", R"({"revision": 0, "mapping_id": "F1~E1", "action": "bless"})", "ana").status, 400);
  EXPECT_EQ(service.decide("nt", R"({"revision": 0, "mapping_id": "F1~E1", "action": "accept"})", "").status, 400);
  EXPECT_EQ(service.decide("nt", R"({"revision": 0, "mapping_id": "F9~E1", "action": "accept"})", "ana").status, 422);
  EXPECT_EQ(service.decide("nt", R"({"revision": 0, "mapping_id": "F1~E1", "action": "edit", "target_feature_id": "F9"})", "ana").status, 422);
  EXPECT_EQ(service.decide("zz", R"({"revision": 0, "mapping_id": "F1~E1", "action": "accept"})", "ana").status, 404);
}

TEST_F(Service, ConcurrentWritersLoseNoUpdates) {
  store.publish("nt", flagged_spec());
  // Everyone races on revision 0; exactly one may win.
  std::vector<int> status(8);
  std::vector<std::thread> pool;
  for (int i = 0; i < 8; ++i) {
    pool.emplace_back([&, i] {
      status[i] = service.decide("nt", R"({"revision": 0, "mapping_id": "F1~E1", "action": "accept"})",
                                 "r" + std::to_string(i)).status;
    });
  }
  for (auto& t : pool) t.join();
  EXPECT_EQ(std::count(status.begin(), status.end(), 200), 1);
  EXPECT_EQ(std::count(status.begin(), status.end(), 409), 7);
  const auto spec = *store.load("nt");
  int human = 0;
  for (const auto& e : spec.mappings[0].provenance) human += e.stage == "review";
  EXPECT_EQ(human, 1);
}

TEST_F(Service, HttpRoundTrip) {
  store.publish("nt", flagged_spec());
  const std::string ui = fx::temp_dir("ui");
  write_file_atomic(ui + "/index.html", "<html>review</html>");

  httplib::Server server;
  bind_review_routes(server, service, ui);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/api/specs");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)[0]["id"], "nt");

  res = cli.Get("/api/specs/nope");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  res = cli.Post("/api/specs/nt/decisions", {{"X-Reviewer", "ana"}},
                 R"({"revision": 0, "mapping_id": "F1~E1", "action": "edit", "target_feature_id": "F2"})",
                 "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(Json::parse(res->body)["revision"], 1);

  res = cli.Post("/api/specs/nt/approve", {{"X-Reviewer", "ana"}}, R"({"revision": 1})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);

  res = cli.Get("/index.html");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, "<html>review</html>");

  server.stop();
  th.join();
}

// ---------------------------------------------------------------------------

TEST(HttpTransport, SendsBearerAndReturnsBody) {
  httplib::Server server;
  std::string seen_auth, seen_body;
  server.Post("/v1/escalate", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(R"({"decision":"reject","confidence":1.0,"rationale":"remote"})", "application/json");
  });
  server.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  auto transport = std::make_shared<HttpTransport>(base + "/v1/escalate", std::string("sekret"), 2000);
  TransportEscalationClient client(transport);
  EscalationRequest req;
  req.entity = fx::entity("E1", "Ø6");
  req.candidates = {{fx::feature("F1", FeatureKind::hole), 0.9}};
  const auto reply = client.complete(req);
  EXPECT_TRUE(reply.ok) << reply.error;
  EXPECT_EQ(seen_auth, "Bearer sekret");
  EXPECT_EQ(Json::parse(seen_body)["entity"]["id"], "E1");
  EXPECT_TRUE(validate_escalation_response(reply.body, req).response);

  const auto bad = HttpTransport(base + "/v1/broken", std::nullopt, 2000).post("{}");
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.error, "HTTP 503");

  server.stop();
  th.join();

  const auto down = HttpTransport(base + "/v1/escalate", std::nullopt, 500).post("{}");
  EXPECT_FALSE(down.ok);
}

TEST(HttpTransport, CredentialFromEnv) {
  ::setenv("DRAWMAP_TEST_KEY", "abc", 1);
  EXPECT_EQ(credential_from_env("DRAWMAP_TEST_KEY"), "abc");
  ::unsetenv("DRAWMAP_TEST_KEY");
  EXPECT_FALSE(credential_from_env("DRAWMAP_TEST_KEY"));
  EXPECT_FALSE(credential_from_env(""));
}

}  // namespace
