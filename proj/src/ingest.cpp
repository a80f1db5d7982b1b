// SPDX-License-Identifier: Apache-2.0
#include "crs/ingest.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <string>

#include "crs/error.hpp"
#include "crs/text.hpp"

namespace crs {

Catalog::Catalog(std::vector<MovieRecord> movies) : movies_(std::move(movies)) {
  lower_titles_.reserve(movies_.size());
  for (std::size_t i = 0; i < movies_.size(); ++i) {
    const auto& m = movies_[i];
    if (!by_id_.emplace(m.movie_id, i).second) {
      throw ParseError("duplicate movie id " + std::to_string(m.movie_id));
    }
    lower_titles_.push_back(text::to_lower(text::trim(m.title)));
    by_title_.emplace(lower_titles_.back(), m.movie_id);
  }
}

const MovieRecord* Catalog::find(MovieId id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &movies_[it->second];
}

std::optional<MovieId> Catalog::find_title(std::string_view title) const {
  auto it = by_title_.find(text::to_lower(text::trim(title)));
  if (it == by_title_.end()) return std::nullopt;
  return it->second;
}

const std::string& Catalog::title(MovieId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error("unknown movie id " + std::to_string(id));
  return lower_titles_[it->second];
}

namespace ingest {
namespace {

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = text::trim(field);
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

bool looks_like_header(std::string_view line) {
  auto fields = split_csv_row(line);
  double dummy = 0;
  return !fields.empty() && !parse_number(fields[0], dummy);
}

/// Iterates CSV data rows, skipping a leading header and blank lines.
template <typename Fn, typename OnError>
void for_each_csv_row(std::istream& in, OnError&& on_error, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    if (line_no == 1 && looks_like_header(line)) continue;
    try {
      fn(line_no, line);
    } catch (const ParseError& e) {
      on_error(line_no, e.what());
    }
  }
}

template <typename T>
auto record_error(Parsed<T>& out) {
  return [&out](std::size_t line, const std::string& msg) { out.errors.push_back({line, msg}); };
}

std::string id_string(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw ParseError("expected string or integer id");
}

RedialConversation conversation_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("record is not an object");
  RedialConversation conv;
  if (!j.contains("conversationId")) throw ParseError("missing conversationId");
  conv.conversation_id = id_string(j.at("conversationId"));
  if (!j.contains("initiatorWorkerId") || !j.contains("respondentWorkerId")) {
    throw ParseError("missing initiatorWorkerId/respondentWorkerId");
  }
  const std::string seeker = id_string(j.at("initiatorWorkerId"));
  const std::string recommender = id_string(j.at("respondentWorkerId"));

  if (j.contains("movieMentions")) {
    const auto& mm = j.at("movieMentions");
    // Conversations without mentions carry an empty array in the raw dump.
    if (mm.is_object()) {
      for (const auto& [key, value] : mm.items()) {
        if (value.is_string()) conv.movie_mentions[key] = std::string(text::trim(value.get<std::string>()));
      }
    } else if (!(mm.is_array() && mm.empty()) && !mm.is_null()) {
      throw ParseError("movieMentions is not an object");
    }
  }

  if (!j.contains("messages") || !j.at("messages").is_array()) throw ParseError("missing messages array");
  for (const auto& m : j.at("messages")) {
    if (!m.contains("senderWorkerId") || !m.contains("text") || !m.at("text").is_string()) {
      throw ParseError("message without senderWorkerId/text");
    }
    const std::string sender = id_string(m.at("senderWorkerId"));
    Message msg;
    if (sender == seeker) {
      msg.role = Role::seeker;
    } else if (sender == recommender) {
      msg.role = Role::recommender;
    } else {
      throw ParseError("unknown worker id " + sender + " in conversation " + conv.conversation_id);
    }
    msg.text = m.at("text").get<std::string>();
    for (const auto& key : mention_keys(msg.text)) {
      if (!conv.movie_mentions.count(key)) {
        throw ParseError("mention @" + key + " has no movieMentions entry");
      }
    }
    conv.messages.push_back(std::move(msg));
  }
  if (conv.messages.empty()) throw ParseError("conversation has no messages");
  return conv;
}

}  // namespace

bool is_half_star(double rating) {
  if (!std::isfinite(rating) || rating < 0.5 || rating > 5.0) return false;
  const double doubled = rating * 2.0;
  return doubled == std::floor(doubled);
}

std::vector<std::string> mention_keys(std::string_view raw) {
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '@') continue;
    std::size_t j = i + 1;
    while (j < raw.size() && raw[j] >= '0' && raw[j] <= '9') ++j;
    if (j > i + 1) keys.emplace_back(raw.substr(i + 1, j - i - 1));
    i = j - 1;
  }
  return keys;
}

Parsed<RedialConversation> parse_redial(std::istream& in) {
  Parsed<RedialConversation> out;
  jsonl::for_each(
      in,
      [&](std::size_t line, const Json& j) {
        try {
          out.records.push_back(conversation_from_json(j));
        } catch (const std::exception& e) {
          out.errors.push_back({line, e.what()});
        }
      },
      [&](std::size_t line, const std::string& msg) { out.errors.push_back({line, msg}); });
  return out;
}

Parsed<RatingEvent> parse_ratings(std::istream& in) {
  Parsed<RatingEvent> out;
  for_each_csv_row(in, record_error(out), [&](std::size_t line_no, const std::string& line) {
    auto f = split_csv_row(line);
    RatingEvent r;
    if (f.size() != 4 || !parse_number(f[0], r.user_id) || !parse_number(f[1], r.movie_id) ||
        !parse_number(f[2], r.rating) || !parse_number(f[3], r.timestamp)) {
      out.errors.push_back({line_no, "malformed rating row"});
      return;
    }
    if (!is_half_star(r.rating)) {
      out.errors.push_back({line_no, "rating " + std::string(text::trim(f[2])) +
                                         " is not a half-star value in [0.5, 5.0]"});
      return;
    }
    if (r.timestamp < 0) {
      out.errors.push_back({line_no, "negative timestamp"});
      return;
    }
    out.records.push_back(r);
  });
  return out;
}

Parsed<MovieRecord> parse_movies(std::istream& in) {
  Parsed<MovieRecord> out;
  std::set<MovieId> seen;
  for_each_csv_row(in, record_error(out), [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f;
    try {
      f = split_csv_row(line);
    } catch (const ParseError& e) {
      out.errors.push_back({line_no, e.what()});
      return;
    }
    MovieRecord m;
    if (f.size() < 2 || !parse_number(f[0], m.movie_id)) {
      out.errors.push_back({line_no, "malformed movie row"});
      return;
    }
    if (!seen.insert(m.movie_id).second) {
      out.errors.push_back({line_no, "duplicate movie id " + std::to_string(m.movie_id)});
      return;
    }
    m.title = std::string(text::trim(f[1]));
    if (f.size() > 2 && f[2] != "(no genres listed)") {
      std::string_view g = f[2];
      std::size_t start = 0;
      while (start <= g.size()) {
        std::size_t bar = g.find('|', start);
        if (bar == std::string_view::npos) bar = g.size();
        auto genre = text::trim(g.substr(start, bar - start));
        if (!genre.empty()) m.genres.emplace_back(genre);
        start = bar + 1;
      }
    }
    out.records.push_back(std::move(m));
  });
  return out;
}

Parsed<TagRelevance> parse_tag_genome(std::istream& scores, std::istream& names) {
  Parsed<TagRelevance> out;
  std::unordered_map<std::int64_t, std::string> tag_names;
  for_each_csv_row(names, record_error(out), [&](std::size_t line_no, const std::string& line) {
    auto f = split_csv_row(line);
    std::int64_t id = 0;
    if (f.size() != 2 || !parse_number(f[0], id)) {
      out.errors.push_back({line_no, "malformed tag-name row"});
      return;
    }
    tag_names[id] = std::string(text::trim(f[1]));
  });
  for_each_csv_row(scores, record_error(out), [&](std::size_t line_no, const std::string& line) {
    auto f = split_csv_row(line);
    TagRelevance t;
    std::int64_t tag_id = 0;
    if (f.size() != 3 || !parse_number(f[0], t.movie_id) || !parse_number(f[1], tag_id) ||
        !parse_number(f[2], t.relevance)) {
      out.errors.push_back({line_no, "malformed genome-score row"});
      return;
    }
    if (!(t.relevance >= 0.0 && t.relevance <= 1.0)) {
      out.errors.push_back({line_no, "relevance outside [0, 1]"});
      return;
    }
    auto it = tag_names.find(tag_id);
    if (it == tag_names.end()) {
      out.errors.push_back({line_no, "tagId " + std::to_string(tag_id) + " has no name (join error)"});
      return;
    }
    t.tag = it->second;
    out.records.push_back(std::move(t));
  });
  return out;
}

Parsed<Review> parse_reviews(std::istream& in) {
  Parsed<Review> out;
  jsonl::for_each(
      in,
      [&](std::size_t line, const Json& j) {
        try {
          Review r = review_from_json(j);
          if (r.review_id.empty()) r.review_id = std::to_string(line);
          if (text::trim(r.text).empty()) {
            out.warnings.push_back({line, "empty review text; skipped"});
            return;
          }
          r.sentences = text::split_sentences(r.text);
          out.records.push_back(std::move(r));
        } catch (const std::exception& e) {
          out.errors.push_back({line, e.what()});
        }
      },
      [&](std::size_t line, const std::string& msg) { out.errors.push_back({line, msg}); });
  return out;
}

Json to_json(const RedialConversation& c) {
  Json msgs = Json::array();
  for (const auto& m : c.messages) {
    msgs.push_back({{"role", m.role == Role::seeker ? "seeker" : "recommender"}, {"text", m.text}});
  }
  return {{"conversation_id", c.conversation_id}, {"messages", msgs}, {"movie_mentions", c.movie_mentions}};
}

Json to_json(const RatingEvent& r) {
  return {{"user_id", r.user_id}, {"movie_id", r.movie_id}, {"rating", r.rating}, {"timestamp", r.timestamp}};
}

Json to_json(const MovieRecord& m) {
  return {{"movie_id", m.movie_id}, {"title", m.title}, {"genres", m.genres}};
}

Json to_json(const TagRelevance& t) {
  return {{"movie_id", t.movie_id}, {"tag", t.tag}, {"relevance", t.relevance}};
}

Json to_json(const Review& r) {
  Json j = {{"review_id", r.review_id}, {"text", r.text}, {"sentences", r.sentences}};
  if (r.movie_id) j["movie_id"] = *r.movie_id;
  if (!r.title.empty()) j["title"] = r.title;
  return j;
}

Review review_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("review record is not an object");
  Review r;
  if (j.contains("movie_id") && !j.at("movie_id").is_null()) {
    if (!j.at("movie_id").is_number_integer()) throw ParseError("movie_id must be an integer");
    r.movie_id = j.at("movie_id").get<MovieId>();
  }
  if (j.contains("title") && j.at("title").is_string()) r.title = j.at("title").get<std::string>();
  if (!r.movie_id && r.title.empty()) throw ParseError("review needs movie_id or title");
  if (!j.contains("text") || !j.at("text").is_string()) throw ParseError("review needs a text string");
  r.text = j.at("text").get<std::string>();
  if (j.contains("review_id")) r.review_id = id_string(j.at("review_id"));
  if (j.contains("sentences") && j.at("sentences").is_array()) {
    r.sentences = j.at("sentences").get<std::vector<std::string>>();
  }
  return r;
}

MovieRecord movie_from_json(const Json& j) {
  MovieRecord m;
  m.movie_id = j.at("movie_id").get<MovieId>();
  m.title = j.at("title").get<std::string>();
  if (j.contains("genres")) m.genres = j.at("genres").get<std::vector<std::string>>();
  return m;
}

}  // namespace ingest
}  // namespace crs
