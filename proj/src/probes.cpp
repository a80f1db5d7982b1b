// SPDX-License-Identifier: Apache-2.0
#include "crs/probes.hpp"

#include <algorithm>
#include <set>

#include "crs/error.hpp"
#include "crs/rng.hpp"
#include "crs/text.hpp"

namespace crs {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

/// Uniform pick among top-decile movies accepted by `ok`.
template <typename Pred>
std::optional<MovieId> pick_negative(const StatsStore& store, Rng& rng, Pred&& ok) {
  std::vector<MovieId> pool;
  for (MovieId m : store.popularity.top_decile()) {
    if (ok(m)) pool.push_back(m);
  }
  if (pool.empty()) return std::nullopt;
  return pool[static_cast<std::size_t>(rng.below(pool.size()))];
}

std::vector<RelatedMovie> top_neighbors(const StatsStore& store, MovieId query, std::size_t k) {
  auto list = store.rankings.of(query);
  if (list.size() > k) list.resize(k);
  return list;
}

}  // namespace

std::string_view family_name(ProbeFamily family) {
  switch (family) {
    case ProbeFamily::recommendation: return "recommendation";
    case ProbeFamily::attribute: return "attribute";
    case ProbeFamily::combination: return "combination";
    case ProbeFamily::description: return "description";
  }
  return "";
}

std::optional<ProbeFamily> parse_family(std::string_view name) {
  if (name == "rec") return ProbeFamily::recommendation;
  if (name == "attr") return ProbeFamily::attribute;
  if (name == "combo") return ProbeFamily::combination;
  if (name == "desc") return ProbeFamily::description;
  for (ProbeFamily f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

ProbeTemplates ProbeTemplates::from_json(const Json& j) {
  ProbeTemplates t;
  t.recommendation = j.value("recommendation", t.recommendation);
  t.attribute = j.value("attribute", t.attribute);
  t.combination = j.value("combination", t.combination);
  t.description = j.value("description", t.description);
  t.answer = j.value("answer", t.answer);
  return t;
}

std::string render_template(std::string_view pattern, std::string_view movie, std::string_view tag) {
  std::string out = text::to_lower(pattern);
  replace_all(out, "{movie}", text::to_lower(movie));
  replace_all(out, "{tag}", text::to_lower(tag));
  return out;
}

std::string review_snippet(const Review& review, std::size_t max_sentences) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < review.sentences.size() && i < max_sentences; ++i) {
    parts.push_back(corpus::clean_review_sentence(review.sentences[i]));
  }
  return text::join(parts, " ");
}

ProbeSet gen_recommendation_probes(const StatsStore& store, const ProbeOptions& options) {
  ProbeSet out;
  const auto& tpl = options.templates;
  for (MovieId query : store.popularity.eligible_movies()) {
    const auto related = top_neighbors(store, query, options.neighbors);
    std::set<MovieId> related_ids;
    for (const auto& r : related) related_ids.insert(r.movie);
    Rng rng(derive_seed(options.seed, "probe-rec", static_cast<std::uint64_t>(query)));
    const auto& query_title = store.catalog.title(query);
    for (const auto& r : related) {
      auto negative = pick_negative(store, rng, [&](MovieId m) {
        return m != query && m != r.movie && !related_ids.count(m);
      });
      if (!negative) {
        ++out.skipped_no_negative;
        continue;
      }
      ProbeCase p;
      p.family = ProbeFamily::recommendation;
      p.inputs = {render_template(tpl.recommendation, query_title)};
      p.targets = {render_template(tpl.answer, store.catalog.title(r.movie)),
                   render_template(tpl.answer, store.catalog.title(*negative))};
      p.metadata.query_movie = query;
      p.metadata.positive_movie = r.movie;
      p.metadata.negative_movie = *negative;
      out.cases.push_back(std::move(p));
    }
  }
  return out;
}

ProbeSet gen_attribute_probes(const StatsStore& store, const ProbeOptions& options) {
  ProbeSet out;
  const auto& tpl = options.templates;
  for (const auto& [movie, tags] : store.tags.by_movie()) {
    if (!store.popularity.eligible(movie) || !store.catalog.find(movie)) continue;
    Rng rng(derive_seed(options.seed, "probe-attr", static_cast<std::uint64_t>(movie)));
    for (const auto& tag : tags) {
      auto negative = pick_negative(store, rng, [&](MovieId m) {
        return m != movie && !store.tags.has(m, tag);
      });
      if (!negative) {
        ++out.skipped_no_negative;
        continue;
      }
      ProbeCase p;
      p.family = ProbeFamily::attribute;
      p.inputs = {render_template(tpl.attribute, "", tag)};
      p.targets = {render_template(tpl.answer, store.catalog.title(movie)),
                   render_template(tpl.answer, store.catalog.title(*negative))};
      p.metadata.tag = tag;
      p.metadata.positive_movie = movie;
      p.metadata.negative_movie = *negative;
      out.cases.push_back(std::move(p));
    }
  }
  return out;
}

ProbeSet gen_combination_probes(const StatsStore& store, const ProbeOptions& options) {
  ProbeSet out;
  const auto& tpl = options.templates;
  for (MovieId query : store.popularity.eligible_movies()) {
    const auto& query_tags = store.tags.tags_of(query);
    if (query_tags.empty()) continue;
    Rng rng(derive_seed(options.seed, "probe-combo", static_cast<std::uint64_t>(query)));
    const auto& query_title = store.catalog.title(query);
    for (const auto& r : top_neighbors(store, query, options.neighbors)) {
      const auto& neighbor_tags = store.tags.tags_of(r.movie);
      std::vector<std::string> shared;
      std::set_intersection(query_tags.begin(), query_tags.end(), neighbor_tags.begin(),
                            neighbor_tags.end(), std::back_inserter(shared));
      for (const auto& tag : shared) {
        auto negative = pick_negative(store, rng, [&](MovieId m) {
          return m != query && m != r.movie && !store.tags.has(m, tag);
        });
        if (!negative) {
          ++out.skipped_no_negative;
          continue;
        }
        ProbeCase p;
        p.family = ProbeFamily::combination;
        p.inputs = {render_template(tpl.combination, query_title, tag)};
        p.targets = {render_template(tpl.answer, store.catalog.title(r.movie)),
                     render_template(tpl.answer, store.catalog.title(*negative))};
        p.metadata.query_movie = query;
        p.metadata.tag = tag;
        p.metadata.positive_movie = r.movie;
        p.metadata.negative_movie = *negative;
        out.cases.push_back(std::move(p));
      }
    }
  }
  return out;
}

ProbeSet gen_description_probes(const StatsStore& store, const ProbeOptions& options) {
  ProbeSet out;
  const auto& tpl = options.templates;
  for (std::size_t i = 0; i < store.reviews.size(); ++i) {
    const auto& review = store.reviews[i];
    if (!review.movie_id || review.sentences.empty()) continue;
    const MovieId movie = *review.movie_id;
    if (!store.popularity.eligible(movie) || !store.catalog.find(movie)) continue;
    Rng rng(derive_seed(options.seed, "probe-desc", i));
    auto negative = pick_negative(store, rng, [&](MovieId m) { return m != movie; });
    if (!negative) {
      ++out.skipped_no_negative;
      continue;
    }
    ProbeCase p;
    p.family = ProbeFamily::description;
    p.inputs = {render_template(tpl.description, store.catalog.title(movie)),
                render_template(tpl.description, store.catalog.title(*negative))};
    p.targets = {review_snippet(review, options.snippet_sentences)};
    p.metadata.positive_movie = movie;
    p.metadata.negative_movie = *negative;
    p.metadata.review_id = review.review_id;
    out.cases.push_back(std::move(p));
  }
  return out;
}

ProbeSet gen_probes(const StatsStore& store, ProbeFamily family, const ProbeOptions& options) {
  switch (family) {
    case ProbeFamily::recommendation: return gen_recommendation_probes(store, options);
    case ProbeFamily::attribute: return gen_attribute_probes(store, options);
    case ProbeFamily::combination: return gen_combination_probes(store, options);
    case ProbeFamily::description: return gen_description_probes(store, options);
  }
  return {};
}

std::vector<std::string> audit_probe(const ProbeCase& p, const StatsStore& store,
                                     const ProbeOptions& options) {
  std::vector<std::string> v;
  const bool two_inputs = p.family == ProbeFamily::description;
  if (p.inputs.size() != (two_inputs ? 2u : 1u) || p.targets.size() != (two_inputs ? 1u : 2u)) {
    v.push_back("wrong input/target shape");
    return v;
  }
  const MovieId pos = p.metadata.positive_movie;
  const MovieId neg = p.metadata.negative_movie;
  if (pos == neg) v.push_back("negative equals positive");
  if (!store.popularity.in_top_decile(neg)) v.push_back("negative outside the popularity top decile");
  switch (p.family) {
    case ProbeFamily::recommendation: {
      if (!p.metadata.query_movie) {
        v.push_back("missing query movie");
        break;
      }
      const MovieId q = *p.metadata.query_movie;
      if (!store.popularity.eligible(q)) v.push_back("query not eligible");
      auto top = top_neighbors(store, q, options.neighbors);
      auto in_top = [&](MovieId m) {
        return std::any_of(top.begin(), top.end(), [&](const RelatedMovie& r) { return r.movie == m; });
      };
      if (!in_top(pos)) v.push_back("positive not among the query's top related movies");
      if (in_top(neg)) v.push_back("negative is among the query's top related movies");
      break;
    }
    case ProbeFamily::attribute:
    case ProbeFamily::combination: {
      if (!p.metadata.tag) {
        v.push_back("missing tag");
        break;
      }
      if (!store.tags.has(pos, *p.metadata.tag)) v.push_back("positive lacks the tag");
      if (store.tags.has(neg, *p.metadata.tag)) v.push_back("negative carries the tag");
      if (p.family == ProbeFamily::combination) {
        if (!p.metadata.query_movie || !store.tags.has(*p.metadata.query_movie, *p.metadata.tag)) {
          v.push_back("query lacks the tag");
        } else if (!store.rankings.contains(*p.metadata.query_movie, pos)) {
          v.push_back("positive not among the query's top related movies");
        }
      }
      break;
    }
    case ProbeFamily::description: {
      if (!p.metadata.review_id) {
        v.push_back("missing review id");
        break;
      }
      auto it = std::find_if(store.reviews.begin(), store.reviews.end(),
                             [&](const Review& r) { return r.review_id == *p.metadata.review_id; });
      if (it == store.reviews.end()) {
        v.push_back("unknown review id");
      } else if (p.targets[0] != review_snippet(*it, options.snippet_sentences)) {
        v.push_back("target is not the review's leading sentences");
      }
      break;
    }
  }
  if (p.positive_index > 1) {
    v.push_back("positive_index out of range");
  } else if (store.catalog.find(pos) && store.catalog.find(neg)) {
    const auto& slots = two_inputs ? p.inputs : p.targets;
    const auto& pattern = two_inputs ? options.templates.description : options.templates.answer;
    const std::string tag = p.metadata.tag.value_or("");
    if (slots[p.positive_index] != render_template(pattern, store.catalog.title(pos), tag)) {
      v.push_back("positive slot does not match its template");
    }
    if (slots[1 - p.positive_index] != render_template(pattern, store.catalog.title(neg), tag)) {
      v.push_back("negative slot does not match its template");
    }
  }
  return v;
}

Json probe_to_json(const ProbeCase& p) {
  Json meta = {{"positive_movie", p.metadata.positive_movie}, {"negative_movie", p.metadata.negative_movie}};
  if (p.metadata.query_movie) meta["query_movie"] = *p.metadata.query_movie;
  if (p.metadata.tag) meta["tag"] = *p.metadata.tag;
  if (p.metadata.review_id) meta["review_id"] = *p.metadata.review_id;
  return {{"family", family_name(p.family)},
          {"inputs", p.inputs},
          {"targets", p.targets},
          {"positive_index", p.positive_index},
          {"metadata", meta}};
}

ProbeCase probe_from_json(const Json& j) {
  ProbeCase p;
  auto family = parse_family(j.at("family").get<std::string>());
  if (!family) throw ParseError("unknown probe family " + j.at("family").dump());
  p.family = *family;
  p.inputs = j.at("inputs").get<std::vector<std::string>>();
  p.targets = j.at("targets").get<std::vector<std::string>>();
  p.positive_index = j.at("positive_index").get<std::size_t>();
  const auto& m = j.at("metadata");
  p.metadata.positive_movie = m.at("positive_movie").get<MovieId>();
  p.metadata.negative_movie = m.at("negative_movie").get<MovieId>();
  if (m.contains("query_movie")) p.metadata.query_movie = m.at("query_movie").get<MovieId>();
  if (m.contains("tag")) p.metadata.tag = m.at("tag").get<std::string>();
  if (m.contains("review_id")) p.metadata.review_id = m.at("review_id").get<std::string>();
  const bool two_inputs = p.family == ProbeFamily::description;
  if (p.inputs.size() != (two_inputs ? 2u : 1u) || p.targets.size() != (two_inputs ? 1u : 2u) ||
      p.positive_index > 1) {
    throw ParseError("probe shape does not match its family");
  }
  return p;
}

void write_probes(const std::filesystem::path& path, const std::vector<ProbeCase>& probes) {
  std::vector<Json> rows;
  rows.reserve(probes.size());
  for (const auto& p : probes) rows.push_back(probe_to_json(p));
  jsonl::write_file(path, rows);
}

std::vector<ProbeCase> read_probes(const std::filesystem::path& path) {
  std::vector<ProbeCase> out;
  for (const auto& j : jsonl::read_file(path)) out.push_back(probe_from_json(j));
  return out;
}

}  // namespace crs
