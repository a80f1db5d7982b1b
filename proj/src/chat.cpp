// SPDX-License-Identifier: Apache-2.0
#include "crs/chat.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "crs/error.hpp"
#include "crs/probes.hpp"
#include "crs/text.hpp"

namespace crs {

std::string_view evidence_name(Evidence e) {
  switch (e) {
    case Evidence::pmi2: return "pmi2";
    case Evidence::tag: return "tag";
    case Evidence::mf: return "mf";
    case Evidence::popularity: return "popularity";
  }
  return "";
}

ChatPolicy::ChatPolicy(const StatsStore& store, ChatOptions options)
    : store_(store), options_(std::move(options)), scorer_(store, options_.weights) {}

std::vector<Recommendation> ChatPolicy::recommend(const std::vector<MovieId>& movies,
                                                  const std::vector<std::string>& tags, std::size_t k,
                                                  const std::vector<MovieId>& exclude) const {
  const std::set<MovieId> excluded(exclude.begin(), exclude.end());
  const std::set<MovieId> mentioned(movies.begin(), movies.end());
  auto allowed = [&](MovieId m) { return !excluded.count(m) && !mentioned.count(m) && store_.catalog.find(m); };

  // Candidate -> rank within its evidence list (lower is better).
  std::map<MovieId, std::size_t> related;
  for (MovieId m : movies) {
    const auto list = rank_neighbors(m, options_.neighbors_per_movie, store_.cooccurrence, store_.popularity,
                                     &store_.catalog);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!allowed(list[i].movie)) continue;
      auto [it, inserted] = related.emplace(list[i].movie, i);
      if (!inserted) it->second = std::min(it->second, i);
    }
  }
  std::set<MovieId> tagged;
  for (const auto& t : tags) {
    for (MovieId m : store_.tags.movies_with(t)) {
      if (allowed(m)) tagged.insert(m);
    }
  }

  std::set<MovieId> candidates;
  Evidence fallback = Evidence::popularity;
  if (!related.empty() && !tagged.empty()) {
    for (const auto& [m, rank] : related) {
      if (tagged.count(m)) candidates.insert(m);
    }
    if (candidates.empty()) {
      for (const auto& [m, rank] : related) candidates.insert(m);
      candidates.insert(tagged.begin(), tagged.end());
    }
  } else if (!related.empty()) {
    for (const auto& [m, rank] : related) candidates.insert(m);
  } else if (!tagged.empty()) {
    candidates = tagged;
  }
  if (candidates.empty() && store_.mf && !movies.empty()) {
    for (MovieId m : movies) {
      if (!store_.mf->has_item(m)) continue;
      for (const auto& [other, sim] : store_.mf->most_similar(m, options_.neighbors_per_movie)) {
        if (allowed(other)) candidates.insert(other);
      }
    }
    fallback = Evidence::mf;
  }
  if (candidates.empty() && (!movies.empty() || !tags.empty())) {
    for (MovieId m : store_.popularity.top_decile()) {
      if (allowed(m)) candidates.insert(m);
    }
    fallback = Evidence::popularity;
  }

  const auto& w = options_.weights;
  const double total = w.relation + w.tag + w.prior;
  struct Scored {
    Recommendation rec;
    std::size_t rank;
    std::uint64_t count;
  };
  std::vector<Scored> scored;
  for (MovieId m : candidates) {
    const MovieId target[] = {m};
    const double rel = w.relation * scorer_.relation(movies, target);
    const double tag = w.tag * scorer_.tag_overlap(tags, target);
    const double pri = w.prior * scorer_.prior(target);
    Scored s;
    s.rec.movie = m;
    s.rec.title = store_.catalog.find(m)->title;
    s.rec.score = total > 0 ? (rel + tag + pri) / total : 0.0;
    if (rel == 0 && tag == 0) {
      s.rec.evidence = related.count(m) ? Evidence::pmi2 : fallback;
    } else {
      s.rec.evidence = rel >= tag ? Evidence::pmi2 : Evidence::tag;
    }
    auto it = related.find(m);
    s.rank = it == related.end() ? std::numeric_limits<std::size_t>::max() : it->second;
    s.count = store_.popularity.count(m);
    scored.push_back(std::move(s));
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.rec.score != b.rec.score) return a.rec.score > b.rec.score;
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.count != b.count) return a.count > b.count;
    return a.rec.movie < b.rec.movie;
  });
  std::vector<Recommendation> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(std::move(scored[i].rec));
  return out;
}

ChatReply ChatPolicy::respond(const std::vector<ChatTurn>& history) const {
  ChatReply reply;
  if (history.empty()) {
    reply.reply = options_.greeting;
    return reply;
  }
  std::vector<MovieId> movies;
  std::vector<std::string> tags;
  std::vector<MovieId> seen;
  for (const auto& turn : history) {
    const auto found = scorer_.movies_in(turn.text);
    seen.insert(seen.end(), found.begin(), found.end());
    if (turn.role != ChatRole::user) continue;
    movies.insert(movies.end(), found.begin(), found.end());
    for (auto& t : scorer_.tags_in(turn.text)) tags.push_back(std::move(t));
  }
  std::sort(movies.begin(), movies.end());
  movies.erase(std::unique(movies.begin(), movies.end()), movies.end());
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());

  if (movies.empty() && tags.empty()) {
    reply.reply = options_.elicitation;
    return reply;
  }
  reply.recommendations = recommend(movies, tags, options_.max_recommendations, seen);
  if (reply.recommendations.empty()) {
    reply.reply = options_.elicitation;
  } else {
    reply.reply = render_template(options_.answer, reply.recommendations.front().title);
  }
  return reply;
}

Json to_json(const ChatReply& reply) {
  Json recs = Json::array();
  for (const auto& r : reply.recommendations) {
    recs.push_back({{"title", r.title}, {"movie_id", r.movie}, {"score", r.score},
                    {"evidence", evidence_name(r.evidence)}});
  }
  return {{"reply", reply.reply}, {"recommendations", recs}};
}

std::vector<ChatTurn> chat_history_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("messages") || !j.at("messages").is_array()) {
    throw Error("body must be an object with a \"messages\" array");
  }
  std::vector<ChatTurn> out;
  for (const auto& m : j.at("messages")) {
    if (!m.is_object() || !m.contains("role") || !m.contains("text") || !m.at("role").is_string() ||
        !m.at("text").is_string()) {
      throw Error("each message needs string \"role\" and \"text\"");
    }
    ChatTurn t;
    const auto role = m.at("role").get<std::string>();
    if (role == "user") {
      t.role = ChatRole::user;
    } else if (role == "assistant") {
      t.role = ChatRole::assistant;
    } else {
      throw Error("unknown role \"" + role + "\"");
    }
    t.text = m.at("text").get<std::string>();
    if (text::trim(t.text).empty()) throw Error("message text must be non-empty");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace crs
