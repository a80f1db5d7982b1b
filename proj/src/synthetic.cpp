// SPDX-License-Identifier: Apache-2.0
#include "crs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "crs/error.hpp"
#include "crs/rng.hpp"
#include "crs/text.hpp"

namespace crs::synth {
namespace {

const char* const kThemes[] = {"vampire", "space opera", "heist", "courtroom", "western", "martial arts",
                               "zombie", "musical", "submarine", "boxing", "pirate", "time travel"};
const char* const kStyles[] = {"dark", "quirky", "atmospheric", "slow burn", "witty", "gritty"};
const char* const kAdjectives[] = {"crimson", "silent", "broken", "golden", "hollow", "distant", "frozen",
                                   "restless", "hidden", "burning", "pale", "wild", "iron", "velvet"};
const char* const kNouns[] = {"harbor", "empire", "river", "garden", "signal", "crown", "mirror", "tide",
                              "orchard", "lantern", "frontier", "canyon", "engine", "meadow", "tower"};
const char* const kOpinions[] = {"i loved every minute of it", "the pacing drags in the middle",
                                 "the cast is wonderful", "the ending caught me off guard",
                                 "the score stays with you", "it looks gorgeous on a big screen",
                                 "some scenes go on too long", "i would watch it again"};

std::size_t weighted_pick(Rng& rng, const std::vector<double>& cumulative) {
  const double u = rng.unit() * cumulative.back();
  return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
}

}  // namespace

Dataset generate(const Options& o) {
  if (o.clusters == 0 || o.clusters > std::size(kThemes)) throw Error("synthetic: clusters must be in [1, 12]");
  if (o.movies_per_cluster < 2 || o.min_likes > o.max_likes) throw Error("synthetic: bad options");
  Rng rng(o.seed);
  Dataset d;
  d.theme_tags.assign(kThemes, kThemes + o.clusters);
  d.style_tags.assign(std::begin(kStyles), std::end(kStyles));

  // Movies: titles are unique adjective/noun pairs with a year.
  std::set<std::string> used;
  auto make_title = [&](MovieId id) {
    for (;;) {
      std::string t = std::string("the ") + kAdjectives[rng.below(std::size(kAdjectives))] + " " +
                      kNouns[rng.below(std::size(kNouns))];
      if (used.insert(t).second) {
        return t + " (" + std::to_string(1960 + (id * 7) % 60) + ")";
      }
      if (used.size() >= std::size(kAdjectives) * std::size(kNouns)) {
        t += " " + std::to_string(id);
        used.insert(t);
        return t + " (" + std::to_string(1960 + (id * 7) % 60) + ")";
      }
    }
  };
  std::vector<std::vector<MovieId>> cluster_movies(o.clusters);
  MovieId next_id = 1;
  for (std::size_t c = 0; c < o.clusters; ++c) {
    for (std::size_t j = 0; j < o.movies_per_cluster; ++j) {
      const MovieId id = next_id++;
      d.movies.push_back({id, make_title(id), {"Drama"}});
      d.cluster_of[id] = static_cast<int>(c);
      cluster_movies[c].push_back(id);
    }
  }
  std::vector<MovieId> rare;
  for (std::size_t j = 0; j < o.rare_movies; ++j) {
    const MovieId id = next_id++;
    d.movies.push_back({id, make_title(id), {"Comedy"}});
    d.cluster_of[id] = -1;
    rare.push_back(id);
  }
  std::vector<MovieId> all_clustered;
  for (const auto& cm : cluster_movies) all_clustered.insert(all_clustered.end(), cm.begin(), cm.end());

  // Zipf popularity inside each cluster.
  std::vector<double> cumulative;
  double acc = 0.0;
  for (std::size_t j = 0; j < o.movies_per_cluster; ++j) {
    acc += 1.0 / std::pow(static_cast<double>(j + 1), o.zipf_exponent);
    cumulative.push_back(acc);
  }

  // Ratings.
  std::int64_t clock = 1'000'000'000;
  for (std::size_t u = 0; u < o.users; ++u) {
    const UserId user = static_cast<UserId>(u + 1);
    const std::size_t home = rng.below(o.clusters);
    const std::size_t target = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(o.min_likes), static_cast<std::int64_t>(o.max_likes)));
    std::vector<MovieId> liked;
    std::set<MovieId> seen;
    std::size_t attempts = 0;
    while (liked.size() < target && attempts++ < target * 50) {
      MovieId m;
      if (rng.unit() < o.noise) {
        m = all_clustered[rng.below(all_clustered.size())];
      } else {
        m = cluster_movies[home][weighted_pick(rng, cumulative)];
      }
      if (seen.insert(m).second) liked.push_back(m);
    }
    if (!rare.empty() && rng.unit() < 0.02) {
      const MovieId m = rare[rng.below(rare.size())];
      if (seen.insert(m).second) liked.push_back(m);
    }
    for (MovieId m : liked) {
      clock += 1 + static_cast<std::int64_t>(rng.below(5000));
      d.ratings.push_back({user, m, rng.unit() < 0.5 ? 4.5 : 5.0, clock});
    }
    for (std::size_t k = 0; k < o.dislikes; ++k) {
      const MovieId m = d.movies[rng.below(d.movies.size())].movie_id;
      if (!seen.insert(m).second) continue;
      clock += 1 + static_cast<std::int64_t>(rng.below(5000));
      const double r = 0.5 * static_cast<double>(rng.between(1, 8));  // 0.5 .. 4.0
      d.ratings.push_back({user, m, r, clock});
    }
  }

  // Tag genome: every movie gets a score for every tag.
  for (const auto& m : d.movies) {
    const int c = d.cluster_of[m.movie_id];
    for (std::size_t t = 0; t < d.theme_tags.size(); ++t) {
      double rel = 0.05 + 0.3 * rng.unit();
      if (c == static_cast<int>(t)) rel = 0.85 + 0.15 * rng.unit();
      d.tag_relevances.push_back({m.movie_id, d.theme_tags[t], rel});
    }
    for (const auto& style : d.style_tags) {
      const double u = rng.unit();
      double rel = 0.1 + 0.5 * rng.unit();
      if (u < 0.3) {
        rel = 0.81 + 0.19 * rng.unit();
      } else if (u < 0.4) {
        rel = 0.80;  // boundary: not a tag
      }
      d.tag_relevances.push_back({m.movie_id, style, rel});
    }
  }

  // Reviews for clustered movies.
  std::size_t review_no = 0;
  for (MovieId m : all_clustered) {
    const auto& title = d.movies[static_cast<std::size_t>(m - 1)].title;
    const std::string theme = d.theme_tags[static_cast<std::size_t>(d.cluster_of[m])];
    for (std::size_t r = 0; r < o.reviews_per_movie; ++r) {
      const std::size_t n = 2 + rng.below(5);
      std::vector<std::string> sentences;
      sentences.push_back("This " + theme + " story grabbed me from the first scene.");
      for (std::size_t s = 1; s < n; ++s) {
        std::string op = kOpinions[rng.below(std::size(kOpinions))];
        op[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(op[0])));
        sentences.push_back(op + (rng.unit() < 0.2 ? "!" : "."));
      }
      Review rv;
      rv.review_id = "r" + std::to_string(++review_no);
      rv.movie_id = m;
      rv.title = title;
      rv.text = text::join(sentences, " ");
      rv.sentences = sentences;
      d.reviews.push_back(std::move(rv));
    }
  }

  // ReDial-format dialogues with 3-8 messages and mention keys.
  for (std::size_t i = 0; i < o.conversations; ++i) {
    const std::string seeker = std::to_string(1000 + 2 * i);
    const std::string recommender = std::to_string(1001 + 2 * i);
    Json rec = {{"conversationId", std::to_string(20000 + i)},
                {"initiatorWorkerId", std::stoll(seeker)},
                {"respondentWorkerId", std::stoll(recommender)},
                {"movieMentions", Json::object()},
                {"messages", Json::array()}};
    const std::size_t c = rng.below(o.clusters);
    auto mention = [&](Json& r) {
      const MovieId m = cluster_movies[c][rng.below(cluster_movies[c].size())];
      const std::string key = std::to_string(100000 + m);
      r["movieMentions"][key] = d.movies[static_cast<std::size_t>(m - 1)].title;
      return "@" + key;
    };
    const std::size_t n = 3 + rng.below(6);
    bool seeker_turn = true;
    for (std::size_t k = 0; k < n; ++k) {
      std::string textv;
      if (k == 0) {
        textv = "Hi! I'm looking for a " + d.theme_tags[c] + " movie.";
      } else if (seeker_turn) {
        textv = rng.unit() < 0.5 ? "I liked " + mention(rec) + " a lot" : "Not seen it, anything else?";
      } else {
        textv = rng.unit() < 0.7 ? "Have you seen " + mention(rec) + " ?" : "What else do you enjoy?";
      }
      rec["messages"].push_back({{"senderWorkerId", std::stoll(seeker_turn ? seeker : recommender)},
                                 {"text", textv}});
      // Occasionally the same speaker sends two messages in a row.
      if (rng.unit() < 0.8) seeker_turn = !seeker_turn;
    }
    d.redial_records.push_back(rec);
  }
  for (const auto& r : d.redial_records) {
    std::istringstream in(jsonl::dump(r) + "\n");
    auto parsed = ingest::parse_redial(in);
    if (!parsed.errors.empty()) throw Error("synthetic: generated an invalid dialogue: " + parsed.errors[0].message);
    d.conversations.push_back(parsed.records.at(0));
  }
  return d;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

}  // namespace

void write(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "movies.csv");
    out << "movieId,title,genres\n";
    for (const auto& m : d.movies) out << m.movie_id << "," << csv_field(m.title) << "," << text::join(m.genres, "|") << "\n";
  }
  {
    auto out = open_out(dir / "ratings.csv");
    out << "userId,movieId,rating,timestamp\n";
    for (const auto& r : d.ratings) out << r.user_id << "," << r.movie_id << "," << fmt(r.rating) << "," << r.timestamp << "\n";
  }
  {
    std::map<std::string, int> tag_ids;
    for (const auto& t : d.tag_relevances) tag_ids.emplace(t.tag, 0);
    int next = 1;
    for (auto& [tag, id] : tag_ids) id = next++;
    auto tags = open_out(dir / "genome-tags.csv");
    tags << "tagId,tag\n";
    for (const auto& [tag, id] : tag_ids) tags << id << "," << csv_field(tag) << "\n";
    auto scores = open_out(dir / "genome-scores.csv");
    scores << "movieId,tagId,relevance\n";
    for (const auto& t : d.tag_relevances) scores << t.movie_id << "," << tag_ids[t.tag] << "," << fmt(t.relevance) << "\n";
  }
  {
    auto out = open_out(dir / "reviews.jsonl");
    for (const auto& r : d.reviews) {
      jsonl::write_line(out, {{"review_id", r.review_id}, {"movie_id", *r.movie_id}, {"title", r.title}, {"text", r.text}});
    }
  }
  {
    auto out = open_out(dir / "redial.jsonl");
    for (const auto& r : d.redial_records) jsonl::write_line(out, r);
  }
}

}  // namespace crs::synth
