// SPDX-License-Identifier: Apache-2.0
#include "crs/service.hpp"

#include <cstdlib>
#include <fstream>

#include "crs/error.hpp"
#include "crs/text.hpp"
#include "httplib.h"

namespace crs {

ServiceConfig ServiceConfig::from_json(const Json& j) try {
  ServiceConfig c;
  if (j.contains("store")) c.store = j.at("store").get<std::string>();
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  if (j.contains("scorer")) c.scorer = ScorerConfig::from_json(j.at("scorer"));
  if (j.contains("chat_weights")) {
    const auto& w = j.at("chat_weights");
    if (!w.is_array() || w.size() != 3) throw Error("chat_weights must have three entries");
    c.chat_weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
  }
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  if (c.threads == 0) throw Error("threads must be positive");
  return c;
} catch (const Json::exception& e) {
  throw Error(std::string("service config: ") + e.what());
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open service config " + path.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("service config " + path.string() + " is not valid JSON");
  return from_json(j);
}

void ServiceConfig::apply_env() {
  if (const char* s = std::getenv("CRS_STORE"); s && *s) store = s;
}

struct Service::Impl {
  ServiceConfig config;
  std::shared_ptr<const StatsStore> store;
  std::unique_ptr<Scorer> scorer;
  std::unique_ptr<ChatPolicy> chat;
  httplib::Server server;
  int port = -1;

  void init() {
    scorer = make_scorer(config.scorer, store.get());
    ChatOptions chat_options;
    chat_options.weights = config.chat_weights;
    chat = std::make_unique<ChatPolicy>(*store, chat_options);
    server.new_task_queue = [n = config.threads] { return new httplib::ThreadPool(n); };
    routes();
  }

  static void send(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(jsonl::dump(body), "application/json; charset=utf-8");
  }

  static Json parse_body(const httplib::Request& req) {
    Json j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error("request body is not valid JSON");
    return j;
  }

  static std::pair<std::string, std::string> pair_of(const Json& j) {
    if (!j.is_object() || !j.contains("input") || !j.contains("target") || !j.at("input").is_string() ||
        !j.at("target").is_string()) {
      throw Error("expected {\"input\": string, \"target\": string}");
    }
    return {j.at("input").get<std::string>(), j.at("target").get<std::string>()};
  }

  template <typename Fn>
  static auto guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ScoringError& e) {
        send(res, 502, {{"error", e.what()}});
      } catch (const std::exception& e) {
        send(res, 400, {{"error", e.what()}});
      }
    };
  }

  void routes() {
    server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      send(res, 200, {{"status", "ok"}});
    });

    server.Post("/v1/chat", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto history = chat_history_from_json(parse_body(req));
      send(res, 200, to_json(chat->respond(history)));
    }));

    server.Get("/v1/recommend", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::vector<MovieId> movies;
      std::vector<std::string> tags;
      if (req.has_param("movie")) {
        const auto title = req.get_param_value("movie");
        auto id = store->catalog.find_title(title);
        if (!id) throw Error("unknown movie \"" + title + "\"");
        movies.push_back(*id);
      }
      if (req.has_param("tag")) tags.push_back(text::to_lower(text::trim(req.get_param_value("tag"))));
      if (movies.empty() && tags.empty()) throw Error("give a movie and/or a tag");
      std::size_t k = 10;
      if (req.has_param("k")) {
        const auto v = req.get_param_value("k");
        try {
          const long long n = std::stoll(v);
          if (n < 1 || n > 1000) throw Error("");
          k = static_cast<std::size_t>(n);
        } catch (const std::exception&) {
          throw Error("k must be an integer in [1, 1000]");
        }
      }
      Json list = Json::array();
      for (const auto& r : chat->recommend(movies, tags, k)) {
        list.push_back({{"title", r.title}, {"movie_id", r.movie}, {"score", r.score},
                        {"evidence", evidence_name(r.evidence)}});
      }
      send(res, 200, {{"recommendations", list}});
    }));

    server.Post("/v1/score", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto [input, target] = pair_of(parse_body(req));
      const auto r = scorer->score(input, target);
      send(res, 200, {{"log_likelihood", encode_log_likelihood(r.log_likelihood)}, {"backend_id", r.backend_id}});
    }));

    server.Post("/v1/score_batch", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Json body = parse_body(req);
      if (!body.is_object() || !body.contains("pairs") || !body.at("pairs").is_array()) {
        throw Error("expected {\"pairs\": [...]}");
      }
      std::vector<ScorePair> pairs;
      for (const auto& p : body.at("pairs")) {
        auto [input, target] = pair_of(p);
        pairs.push_back({std::move(input), std::move(target)});
      }
      Json values = Json::array();
      for (const auto& r : scorer->score_batch(pairs, 1)) {
        if (!r.result) throw ScoringError(r.error);
        values.push_back(encode_log_likelihood(r.result->log_likelihood));
      }
      send(res, 200, {{"log_likelihoods", values}});
    }));
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  config.apply_env();
  if (config.store.empty()) throw StoreError("no store path configured (set \"store\" or CRS_STORE)");
  if (!std::filesystem::exists(config.store)) throw StoreError("store not found: " + config.store.string());
  impl_->config = std::move(config);
  impl_->store = std::make_shared<const StatsStore>(load_store(impl_->config.store));
  impl_->init();
}

Service::Service(ServiceConfig config, std::shared_ptr<const StatsStore> store) : impl_(std::make_unique<Impl>()) {
  if (!store) throw StoreError("no store given");
  impl_->config = std::move(config);
  impl_->store = std::move(store);
  impl_->init();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (impl_->port >= 0) return impl_->port;
  auto& c = impl_->config;
  if (c.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(c.host);
  } else {
    impl_->port = impl_->server.bind_to_port(c.host, c.port) ? c.port : -1;
  }
  if (impl_->port < 0) throw Error("cannot bind " + c.host + ":" + std::to_string(c.port));
  return impl_->port;
}

void Service::listen() {
  bind();
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

const StatsStore& Service::store() const { return *impl_->store; }

}  // namespace crs
