// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

#include "crs/chat.hpp"
#include "crs/error.hpp"
#include "crs/service.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"

using namespace crs;

namespace {

/// Runs a Service on a free port for the lifetime of the object.
struct Running {
  explicit Running(std::shared_ptr<const StatsStore> store, ServiceConfig cfg = {}) {
    cfg.port = 0;
    service = std::make_unique<Service>(cfg, std::move(store));
    port = service->bind();
    thread = std::thread([this] { service->listen(); });
    for (int i = 0; i < 200 && !service->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~Running() {
    service->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }
  std::unique_ptr<Service> service;
  int port = 0;
  std::thread thread;
};

std::shared_ptr<const StatsStore> shared_store() {
  static auto s = std::make_shared<const StatsStore>(fixture::planted_store());
  return s;
}

/// Planted store without tags, so the policy ranks by co-occurrence alone.
const StatsStore& tagless_store() {
  static const StatsStore s = [] {
    const auto& d = fixture::planted_data();
    return StatsStore::build(Catalog(d.movies), d.ratings, {}, d.reviews);
  }();
  return s;
}

Json chat_body(const std::string& text) {
  return {{"messages", Json::array({{{"role", "user"}, {"text", text}}})}};
}

}  // namespace

TEST_CASE("chat policy follows the mentioned movie") {
  const auto& store = tagless_store();
  ChatPolicy policy(store);
  std::size_t checked = 0;
  for (MovieId m : store.popularity.eligible_movies()) {
    const auto& ranked = store.rankings.of(m);
    if (ranked.empty()) continue;
    const auto reply = policy.respond({{ChatRole::user, "i loved @ " + store.catalog.title(m) + " @"}});
    REQUIRE_FALSE(reply.recommendations.empty());
    CHECK(reply.recommendations.front().movie == ranked.front().movie);
    CHECK(reply.recommendations.front().evidence == Evidence::pmi2);
    CHECK(reply.reply.find("@") != std::string::npos);
    for (const auto& r : reply.recommendations) CHECK(r.movie != m);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("chat policy greeting, elicitation and tags") {
  const auto& store = fixture::planted_store();
  ChatPolicy policy(store);
  const ChatOptions defaults;
  CHECK(policy.respond({}).reply == defaults.greeting);
  const auto vague = policy.respond({{ChatRole::user, "hello there"}});
  CHECK(vague.reply == defaults.elicitation);
  CHECK(vague.recommendations.empty());

  for (const auto& tag : fixture::planted_data().theme_tags) {
    const auto& holders = store.tags.movies_with(tag);
    if (holders.empty()) continue;
    MovieId best = 0;
    for (MovieId m : holders) {
      const auto c = store.popularity.count(m), bc = best ? store.popularity.count(best) : 0;
      if (!best || c > bc || (c == bc && m < best)) best = m;
    }
    const auto reply = policy.respond({{ChatRole::user, "something " + tag + " please"}});
    REQUIRE_FALSE(reply.recommendations.empty());
    CHECK(reply.recommendations.front().movie == best);
    for (const auto& r : reply.recommendations) CHECK(store.tags.has(r.movie, tag));
  }
}

TEST_CASE("chat policy never repeats a mentioned movie") {
  const auto& store = fixture::planted_store();
  ChatPolicy policy(store);
  const auto& eligible = store.popularity.eligible_movies();
  for (std::size_t i = 0; i + 2 < eligible.size(); i += 3) {
    std::vector<ChatTurn> h{{ChatRole::user, "i liked @ " + store.catalog.title(eligible[i]) + " @"},
                            {ChatRole::assistant, "have you seen @ " + store.catalog.title(eligible[i + 1]) + " @?"},
                            {ChatRole::user, "yes, and @ " + store.catalog.title(eligible[i + 2]) + " @"}};
    for (const auto& r : policy.respond(h).recommendations) {
      CHECK(r.movie != eligible[i]);
      CHECK(r.movie != eligible[i + 1]);
      CHECK(r.movie != eligible[i + 2]);
    }
  }
  CHECK_THROWS_AS(chat_history_from_json(Json{{"messages", {{{"role", "bot"}, {"text", "x"}}}}}), Error);
  CHECK_THROWS_AS(chat_history_from_json(Json{{"messages", {{{"role", "user"}, {"text", ""}}}}}), Error);
}

TEST_CASE("service endpoints") {
  Running srv(shared_store());
  auto cli = srv.client();
  const auto& store = *shared_store();

  auto health = cli.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  const MovieId m = store.popularity.eligible_movies().front();
  auto chat = cli.Post("/v1/chat", chat_body("i loved @ " + store.catalog.title(m) + " @").dump(), "application/json");
  REQUIRE(chat);
  CHECK(chat->status == 200);
  const auto reply = Json::parse(chat->body);
  CHECK(reply.at("reply").is_string());
  CHECK_FALSE(reply.at("recommendations").empty());

  auto rec = cli.Get(("/v1/recommend?k=3&movie=" + httplib::detail::encode_url(store.catalog.title(m))).c_str());
  REQUIRE(rec);
  CHECK(rec->status == 200);
  CHECK(Json::parse(rec->body).at("recommendations").size() <= 3);
  auto unknown = cli.Get("/v1/recommend?movie=nothing%20like%20this");
  REQUIRE(unknown);
  CHECK(unknown->status == 400);

  const Json pair{{"input", "[user] can you recommend me a movie like @ " + store.catalog.title(m) + " @"},
                  {"target", "sure, have you seen @ " + store.catalog.title(store.rankings.of(m).front().movie) + " @?"}};
  auto score = cli.Post("/v1/score", pair.dump(), "application/json");
  REQUIRE(score);
  CHECK(score->status == 200);
  const double ll = Json::parse(score->body).at("log_likelihood").get<double>();
  CHECK(ll <= 0.0);

  auto batch = cli.Post("/v1/score_batch", Json{{"pairs", {pair, pair}}}.dump(), "application/json");
  REQUIRE(batch);
  CHECK(batch->status == 200);
  const auto lls = Json::parse(batch->body).at("log_likelihoods");
  REQUIRE(lls.size() == 2);
  CHECK(lls[0].get<double>() == ll);

  for (const char* bad : {"not json", "{}", R"({"messages":[{"role":"x","text":"y"}]})"}) {
    auto r = cli.Post("/v1/chat", bad, "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(Json::parse(r->body).contains("error"));
  }
  auto r = cli.Post("/v1/score", R"({"input":1})", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
}

TEST_CASE("service handles 32 concurrent chats") {
  Running srv(shared_store());
  const auto& store = *shared_store();
  const auto& eligible = store.popularity.eligible_movies();
  constexpr int kClients = 32;
  std::vector<int> status(kClients, 0);
  std::vector<std::string> bodies(kClients);
  std::vector<std::thread> threads;
  for (int i = 0; i < kClients; ++i) {
    threads.emplace_back([&, i] {
      auto cli = srv.client();
      const auto title = store.catalog.title(eligible[i % 4]);
      auto res = cli.Post("/v1/chat", chat_body("i liked @ " + title + " @").dump(), "application/json");
      if (res) {
        status[i] = res->status;
        bodies[i] = res->body;
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < kClients; ++i) {
    CHECK(status[i] == 200);
    // Same history, same answer.
    CHECK(bodies[i] == bodies[i % 4]);
    CHECK_FALSE(Json::parse(bodies[i]).at("recommendations").empty());
  }
}

TEST_CASE("service configuration") {
  ServiceConfig cfg;
  cfg.store = "/nonexistent/crs-store";
  try {
    Service s(cfg);
    FAIL("expected StoreError");
  } catch (const StoreError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/crs-store") != std::string::npos);
  }

  ::setenv("CRS_STORE", "/tmp/elsewhere", 1);
  cfg.apply_env();
  CHECK(cfg.store == "/tmp/elsewhere");
  ::unsetenv("CRS_STORE");

  const auto parsed = ServiceConfig::from_json(
      Json{{"store", "s"}, {"port", 9000}, {"threads", 4}, {"chat_weights", {1.0, 0.0, 0.0}}});
  CHECK(parsed.port == 9000);
  CHECK(parsed.threads == 4);
  CHECK(parsed.chat_weights.relation == 1.0);
  CHECK_THROWS_AS(ServiceConfig::from_json(Json{{"port", "x"}}), Error);
}
