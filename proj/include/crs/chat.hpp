// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "crs/jsonl.hpp"
#include "crs/scoring.hpp"
#include "crs/store.hpp"

namespace crs {

enum class ChatRole { user, assistant };

struct ChatTurn {
  ChatRole role = ChatRole::user;
  std::string text;
};

enum class Evidence { pmi2, tag, mf, popularity };
std::string_view evidence_name(Evidence e);

struct Recommendation {
  MovieId movie = 0;
  std::string title;
  double score = 0.0;  // composite weighted sum in [0, 1]
  Evidence evidence = Evidence::popularity;
};

struct ChatReply {
  std::string reply;
  std::vector<Recommendation> recommendations;  // descending score
};

struct ChatOptions {
  /// Popularity only breaks ties by default, so the ranking follows the
  /// user's evidence.
  CompositeWeights weights{0.5, 0.4, 0.0};
  std::size_t max_recommendations = 5;
  std::size_t neighbors_per_movie = 20;
  std::string greeting = "hi! tell me a movie you liked or the kind of movie you are in the mood for.";
  std::string elicitation = "what kind of movie are you in the mood for? a title you enjoyed helps too.";
  std::string answer = "sure, have you seen @ {movie} @?";
};

/// Statistics-driven recommender behind the chat endpoint. Stateless and
/// deterministic; safe to share across threads.
class ChatPolicy {
 public:
  ChatPolicy(const StatsStore& store, ChatOptions options = {});

  ChatReply respond(const std::vector<ChatTurn>& history) const;

  /// Ranked movies for explicit evidence; `exclude` is never returned.
  std::vector<Recommendation> recommend(const std::vector<MovieId>& movies, const std::vector<std::string>& tags,
                                        std::size_t k, const std::vector<MovieId>& exclude = {}) const;

  const CompositeScorer& scorer() const { return scorer_; }

 private:
  const StatsStore& store_;
  ChatOptions options_;
  CompositeScorer scorer_;
};

Json to_json(const ChatReply& reply);
/// Throws crs::Error on a malformed history (unknown role, empty text).
std::vector<ChatTurn> chat_history_from_json(const Json& j);

}  // namespace crs
