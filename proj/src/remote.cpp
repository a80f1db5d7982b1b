// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "crs/error.hpp"
#include "crs/scoring.hpp"
#include "crs/text.hpp"
#include "httplib.h"

namespace crs {
namespace {

std::unique_ptr<httplib::Client> make_client(const RemoteEndpoint& ep) {
  auto c = std::make_unique<httplib::Client>(ep.host, ep.port);
  const auto sec = ep.timeout_ms / 1000;
  const auto usec = (ep.timeout_ms % 1000) * 1000;
  c->set_connection_timeout(sec, usec);
  c->set_read_timeout(sec, usec);
  c->set_write_timeout(sec, usec);
  return c;
}

Json post(httplib::Client& client, const RemoteEndpoint& ep, const std::string& path, const Json& body) {
  auto res = client.Post(ep.base_path + path, jsonl::dump(body), "application/json");
  if (!res) {
    throw ScoringError("request to " + ep.host + ":" + std::to_string(ep.port) + path +
                       " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ScoringError(path + " returned status " + std::to_string(res->status) + ": " + res->body);
  }
  Json j = Json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ScoringError(path + " returned a malformed body");
  return j;
}

Json pair_json(std::string_view input, std::string_view target) {
  return {{"input", text::to_lower(input)}, {"target", text::to_lower(target)}};
}

}  // namespace

RemoteEndpoint parse_endpoint(std::string_view url) {
  RemoteEndpoint ep;
  std::string_view rest = url;
  if (rest.starts_with("http://")) {
    rest.remove_prefix(7);
  } else if (rest.find("://") != std::string_view::npos) {
    throw Error("only http:// endpoints are supported: " + std::string(url));
  }
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) {
    ep.base_path = std::string(rest.substr(slash));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    ep.host = std::string(authority);
    ep.port = 80;
  } else {
    ep.host = std::string(authority.substr(0, colon));
    try {
      ep.port = std::stoi(std::string(authority.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error("bad port in endpoint " + std::string(url));
    }
  }
  if (ep.host.empty()) throw Error("missing host in endpoint " + std::string(url));
  return ep;
}

RemoteScorer::RemoteScorer(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.timeout_ms <= 0) throw Error("remote timeout must be > 0");
  if (endpoint_.max_in_flight == 0) endpoint_.max_in_flight = 1;
  if (endpoint_.batch_size == 0) endpoint_.batch_size = 1;
}

std::string RemoteScorer::id() const {
  return "remote(" + endpoint_.host + ":" + std::to_string(endpoint_.port) + endpoint_.base_path + ")";
}

ScoreResult RemoteScorer::score(std::string_view input, std::string_view target) const {
  auto client = make_client(endpoint_);
  Json j = post(*client, endpoint_, "/v1/score", pair_json(input, target));
  if (!j.contains("log_likelihood")) throw ScoringError("/v1/score response lacks log_likelihood");
  return {decode_log_likelihood(j.at("log_likelihood")), id()};
}

std::vector<BatchScore> RemoteScorer::score_batch(std::span<const ScorePair> pairs, std::size_t max_threads) const {
  std::vector<BatchScore> out(pairs.size());
  const std::size_t chunk = endpoint_.batch_size;
  const std::size_t chunks = (pairs.size() + chunk - 1) / chunk;
  std::size_t workers = endpoint_.max_in_flight;
  if (max_threads > 0) workers = std::min(workers, max_threads);
  workers = std::min(workers, chunks);
  std::atomic<std::size_t> next{0};
  const std::string backend = id();

  auto run = [&] {
    auto client = make_client(endpoint_);
    for (std::size_t c = next++; c < chunks; c = next++) {
      const std::size_t lo = c * chunk;
      const std::size_t hi = std::min(pairs.size(), lo + chunk);
      try {
        Json body = {{"pairs", Json::array()}};
        for (std::size_t i = lo; i < hi; ++i) body["pairs"].push_back(pair_json(pairs[i].input, pairs[i].target));
        Json j = post(*client, endpoint_, "/v1/score_batch", body);
        const auto it = j.find("log_likelihoods");
        if (it == j.end() || !it->is_array() || it->size() != hi - lo) {
          throw ScoringError("/v1/score_batch returned the wrong number of values");
        }
        std::vector<double> values;
        for (const auto& v : *it) values.push_back(decode_log_likelihood(v));
        for (std::size_t i = lo; i < hi; ++i) out[i].result = ScoreResult{values[i - lo], backend};
      } catch (const std::exception& e) {
        for (std::size_t i = lo; i < hi; ++i) out[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace crs
