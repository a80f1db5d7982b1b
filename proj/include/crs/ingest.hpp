// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crs/jsonl.hpp"

namespace crs {

using MovieId = std::int64_t;
using UserId = std::int64_t;

enum class Role { seeker, recommender };

struct Message {
  Role role = Role::seeker;
  std::string text;
  bool operator==(const Message&) const = default;
};

struct RedialConversation {
  std::string conversation_id;
  std::vector<Message> messages;
  /// Mention key (digits after `@` in raw text) -> "Title (Year)".
  std::map<std::string, std::string> movie_mentions;
  bool operator==(const RedialConversation&) const = default;
};

struct RatingEvent {
  UserId user_id = 0;
  MovieId movie_id = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
  bool operator==(const RatingEvent&) const = default;
};

struct MovieRecord {
  MovieId movie_id = 0;
  std::string title;  // "Zootopia (2016)"
  std::vector<std::string> genres;
  bool operator==(const MovieRecord&) const = default;
};

struct TagRelevance {
  MovieId movie_id = 0;
  std::string tag;
  double relevance = 0.0;
  bool operator==(const TagRelevance&) const = default;
};

struct Review {
  std::string review_id;
  std::optional<MovieId> movie_id;
  std::string title;  // empty when only movie_id was given
  std::string text;
  std::vector<std::string> sentences;
  bool operator==(const Review&) const = default;
};

struct RecordIssue {
  std::size_t line = 0;
  std::string message;
};

/// Records that parsed, plus per-record errors (record rejected) and
/// warnings (record skipped by rule). Nothing is dropped silently.
template <typename T>
struct Parsed {
  std::vector<T> records;
  std::vector<RecordIssue> errors;
  std::vector<RecordIssue> warnings;
};

/// Movie catalog keyed by id, with exact lowercase title lookup.
class Catalog {
 public:
  Catalog() = default;
  /// Throws ParseError on a duplicate movie id.
  explicit Catalog(std::vector<MovieRecord> movies);

  const MovieRecord* find(MovieId id) const;
  std::optional<MovieId> find_title(std::string_view title) const;
  /// Lowercased title; throws Error for an unknown id.
  const std::string& title(MovieId id) const;

  const std::vector<MovieRecord>& movies() const { return movies_; }
  std::size_t size() const { return movies_.size(); }

 private:
  std::vector<MovieRecord> movies_;
  std::unordered_map<MovieId, std::size_t> by_id_;
  std::unordered_map<std::string, MovieId> by_title_;
  std::vector<std::string> lower_titles_;
};

namespace ingest {

bool is_half_star(double rating);

/// Line-delimited ReDial records. Roles come from matching each message's
/// senderWorkerId against initiatorWorkerId (seeker) and respondentWorkerId
/// (recommender).
Parsed<RedialConversation> parse_redial(std::istream& in);

/// `userId,movieId,rating,timestamp` with a header row.
Parsed<RatingEvent> parse_ratings(std::istream& in);

/// `movieId,title,genres` with a header row; genres are `|`-separated.
Parsed<MovieRecord> parse_movies(std::istream& in);

/// Joins `movieId,tagId,relevance` rows with `tagId,tag` names.
Parsed<TagRelevance> parse_tag_genome(std::istream& scores, std::istream& names);

/// Line-delimited `{"movie_id": int | "title": string, "text": string}`,
/// optionally with "review_id". Sentences are split on ingest.
Parsed<Review> parse_reviews(std::istream& in);

/// Mention keys (`@` followed by digits) in raw ReDial text, in order.
std::vector<std::string> mention_keys(std::string_view raw_text);

Json to_json(const RedialConversation& c);
Json to_json(const RatingEvent& r);
Json to_json(const MovieRecord& m);
Json to_json(const TagRelevance& t);
Json to_json(const Review& r);

Review review_from_json(const Json& j);
MovieRecord movie_from_json(const Json& j);

}  // namespace ingest
}  // namespace crs
