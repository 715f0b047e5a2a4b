#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <future>

#include "colorrec/error.hpp"
#include "service_fixture.hpp"

using namespace colorrec;

namespace {

contract::SchemaChecker schema() { return contract::SchemaChecker::from_file(COLORREC_SCHEMA_FILE); }

}  // namespace

TEST(Service, ContractSuitePasses) {
  const auto& world = fixture::small_world();
  fixture::RunningService svc(world.model);
  const contract::Report rep = contract::run(fixture::contract_inputs(world, svc.port()), schema());
  for (const auto& f : rep.failures) ADD_FAILURE() << f;
  EXPECT_GT(rep.checks, 60);
  EXPECT_EQ(svc.service().session_count(), 2u);
}

TEST(Service, SchemaCheckerCatchesViolations) {
  const auto s = schema();
  const nlohmann::json ok = {{"status", "ok"}, {"vocab_size", 3}};
  EXPECT_TRUE(s.check_response("/health", "get", 200, ok).empty());
  EXPECT_FALSE(s.check_response("/health", "get", 200, {{"status", "ok"}}).empty());
  EXPECT_FALSE(s.check_response("/health", "get", 200, {{"status", "bad"}, {"vocab_size", 3}}).empty());
  EXPECT_FALSE(s.check_response("/health", "get", 500, ok).empty());
  const nlohmann::json cand = {{"id", "doc-1"},
                               {"recommendations",
                                {{{"slot", "svg:0"},
                                  {"source", "#00FF00"},
                                  {"candidates", {{{"code", "1_2_3"}, {"hex", "#zz0000"}, {"probability", 0.5}, {"rank", 1}}}}}}}};
  EXPECT_EQ(s.check_response("/documents/{id}/recommend", "post", 200, cand).size(), 1u);
}

TEST(Service, PersistsSessionsAcrossRestarts) {
  const auto& world = fixture::small_world();
  const auto dir = std::filesystem::temp_directory_path() / ("colorrec-persist-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  ServiceOptions opts;
  opts.persist_dir = dir.string();
  const auto in = fixture::contract_inputs(world, 0);
  std::string id;
  {
    fixture::RunningService svc(world.model, opts);
    httplib::Client cli("127.0.0.1", svc.port());
    auto r = cli.Post("/documents", in.document, "application/json");
    ASSERT_TRUE(r);
    id = nlohmann::json::parse(r->body)["id"];
    ASSERT_TRUE(cli.Post("/documents/" + id + "/favorites", R"({"snapshot": "keep"})", "application/json"));
  }
  {
    fixture::RunningService svc(world.model, opts);
    httplib::Client cli("127.0.0.1", svc.port());
    auto r = cli.Get("/documents/" + id + "/favorites");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(nlohmann::json::parse(r->body)["favorites"].size(), 1u);
    // New ids continue after the restored ones.
    auto up = cli.Post("/documents", in.document, "application/json");
    ASSERT_TRUE(up);
    EXPECT_NE(nlohmann::json::parse(up->body)["id"], id);
  }
  std::filesystem::remove_all(dir);
}

TEST(Service, EvictsIdleSessions) {
  const auto& world = fixture::small_world();
  ServiceOptions opts;
  opts.session_ttl = std::chrono::seconds(0);
  fixture::RunningService svc(world.model, opts);
  httplib::Client cli("127.0.0.1", svc.port());
  const auto in = fixture::contract_inputs(world, 0);
  auto r = cli.Post("/documents", in.document, "application/json");
  ASSERT_TRUE(r);
  const std::string id = nlohmann::json::parse(r->body)["id"];
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  auto g = cli.Get("/documents/" + id);
  ASSERT_TRUE(g);
  EXPECT_EQ(g->status, 404);
}

TEST(Service, ConcurrentSessionsStayIndependent) {
  const auto& world = fixture::small_world();
  fixture::RunningService svc(world.model);
  const auto in = fixture::contract_inputs(world, svc.port());
  std::vector<std::future<bool>> jobs;
  for (int t = 0; t < 4; ++t) {
    jobs.push_back(std::async(std::launch::async, [&] {
      httplib::Client cli("127.0.0.1", svc.port());
      auto up = cli.Post("/documents", in.document, "application/json");
      if (!up || up->status != 200) return false;
      const std::string id = nlohmann::json::parse(up->body)["id"];
      std::string first;
      for (int i = 0; i < 5; ++i) {
        auto r = cli.Post("/documents/" + id + "/recommend", R"({"slots": ["svg:0"], "n": 3})", "application/json");
        if (!r || r->status != 200) return false;
        if (i == 0) first = r->body;
        if (r->body != first) return false;
      }
      return true;
    }));
  }
  for (auto& j : jobs) EXPECT_TRUE(j.get());
}

TEST(Service, RequiresModel) {
  EXPECT_THROW(ColorService(nullptr), Error);
}
