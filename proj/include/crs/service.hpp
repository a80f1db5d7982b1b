// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "crs/chat.hpp"
#include "crs/scoring.hpp"
#include "crs/store.hpp"

namespace crs {

struct ServiceConfig {
  std::filesystem::path store;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  ScorerConfig scorer;
  CompositeWeights chat_weights = ChatOptions{}.weights;
  std::uint64_t seed = 13;
  std::size_t threads = 32;

  /// {"store","host","port","scorer":{...},"chat_weights":[...],"seed","threads"}
  static ServiceConfig from_json(const Json& j);
  static ServiceConfig load(const std::filesystem::path& path);
  /// CRS_STORE, when set, replaces the store path.
  void apply_env();
};

/// Endpoints:
///   POST /v1/chat          {"messages":[{"role","text"}...]}
///   GET  /v1/recommend     ?movie=<title>&tag=<tag>&k=<n>
///   POST /v1/score         {"input","target"}
///   POST /v1/score_batch   {"pairs":[{"input","target"}...]}
///   GET  /v1/health
/// Malformed requests get 400 {"error": ...}; scorer failures 502.
class Service {
 public:
  /// Loads the store once; throws StoreError naming the missing path.
  explicit Service(ServiceConfig config);
  /// Serves an already-built store (tests, embedding).
  Service(ServiceConfig config, std::shared_ptr<const StatsStore> store);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and returns the bound port.
  int bind();
  /// Blocks until stop(); bind() is called if needed.
  void listen();
  void stop();
  bool running() const;

  const StatsStore& store() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace crs
