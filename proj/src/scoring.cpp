// SPDX-License-Identifier: Apache-2.0
#include "crs/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "crs/error.hpp"
#include "crs/text.hpp"

namespace crs {

std::vector<BatchScore> Scorer::score_batch(std::span<const ScorePair> pairs, std::size_t max_threads) const {
  std::vector<BatchScore> out(pairs.size());
  if (max_threads == 0) max_threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(max_threads, pairs.size());
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        out[i].result = score(pairs[i].input, pairs[i].target);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  if (workers <= 1) {
    run();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  return out;
}

CompositeScorer::CompositeScorer(const StatsStore& store, CompositeWeights weights)
    : store_(store), weights_(weights), vocabulary_(store.tags.vocabulary_longest_first()) {
  if (weights_.relation < 0 || weights_.tag < 0 || weights_.prior < 0) {
    throw Error("composite weights must be non-negative");
  }
  std::tie(pmi_min_, pmi_max_) = pmi2_range(store.cooccurrence);
  for (const auto& m : store.catalog.movies()) titles_longest_first_.push_back(text::to_lower(m.title));
  std::sort(titles_longest_first_.begin(), titles_longest_first_.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
}

std::string CompositeScorer::id() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "composite(%g,%g,%g)", weights_.relation, weights_.tag, weights_.prior);
  return buf;
}

std::vector<MovieId> CompositeScorer::movies_in(std::string_view s) const {
  std::vector<MovieId> out;
  bool delimited = false;
  try {
    auto spans = text::find_title_spans(s);
    delimited = !spans.empty();
    for (const auto& span : spans) {
      if (auto id = store_.catalog.find_title(span.title)) out.push_back(*id);
    }
  } catch (const DelimiterError&) {
    delimited = false;
  }
  if (!delimited) {
    for (const auto& t : text::match_phrases(text::to_lower(s), titles_longest_first_, false)) {
      if (auto id = store_.catalog.find_title(t)) out.push_back(*id);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> CompositeScorer::tags_in(std::string_view s) const {
  std::vector<std::string> found;
  const std::string lower = text::to_lower(s);
  try {
    found = text::match_phrases(lower, vocabulary_, true);
  } catch (const DelimiterError&) {
    found = text::match_phrases(lower, vocabulary_, false);
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  return found;
}

double CompositeScorer::relation(std::span<const MovieId> inputs, std::span<const MovieId> targets) const {
  double best = 0.0;
  for (MovieId a : inputs) {
    for (MovieId b : targets) {
      if (a == b || store_.cooccurrence.count(a, b) == 0) continue;
      const double v = pmi2(a, b, store_.cooccurrence);
      const double span = pmi_max_ - pmi_min_;
      best = std::max(best, span > 0 ? (v - pmi_min_) / span : 1.0);
    }
  }
  return best;
}

double CompositeScorer::tag_overlap(std::span<const std::string> tags, std::span<const MovieId> targets) const {
  if (tags.empty()) return 0.0;
  double best = 0.0;
  for (MovieId m : targets) {
    std::size_t carried = 0;
    for (const auto& t : tags) carried += store_.tags.has(m, t) ? 1 : 0;
    best = std::max(best, static_cast<double>(carried) / static_cast<double>(tags.size()));
  }
  return best;
}

double CompositeScorer::prior(std::span<const MovieId> targets) const {
  const double max_count = static_cast<double>(store_.popularity.max_count());
  if (max_count <= 0) return 0.0;
  double best = 0.0;
  for (MovieId m : targets) {
    const double c = static_cast<double>(store_.popularity.count(m));
    best = std::max(best, std::log1p(c) / std::log1p(max_count));
  }
  return best;
}

ScoreResult CompositeScorer::score(std::string_view input, std::string_view target) const {
  ScoreResult r{kNegInf, id()};
  const double total = weights_.relation + weights_.tag + weights_.prior;
  if (total <= 0) return r;
  const auto targets = movies_in(target);
  if (targets.empty()) return r;
  const auto inputs = movies_in(input);
  const auto tags = tags_in(input);
  double s = 0.0;
  if (weights_.relation > 0) s += weights_.relation * relation(inputs, targets);
  if (weights_.tag > 0) s += weights_.tag * tag_overlap(tags, targets);
  if (weights_.prior > 0) s += weights_.prior * prior(targets);
  s /= total;
  if (s > 0) r.log_likelihood = std::min(0.0, std::log(s));
  return r;
}

double decode_log_likelihood(const Json& v) {
  if (v.is_null()) return kNegInf;
  if (v.is_string() && v.get<std::string>() == "-inf") return kNegInf;
  if (!v.is_number()) throw ScoringError("log_likelihood is not a number: " + v.dump());
  const double d = v.get<double>();
  if (std::isnan(d) || d > 0) throw ScoringError("log_likelihood out of range: " + v.dump());
  return d;
}

Json encode_log_likelihood(double v) {
  if (std::isinf(v) && v < 0) return "-inf";
  return v;
}

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "composite") return Backend::composite;
  if (name == "ngram") return Backend::ngram;
  if (name == "remote") return Backend::remote;
  return std::nullopt;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::composite: return "composite";
    case Backend::ngram: return "ngram";
    case Backend::remote: return "remote";
  }
  return "";
}

void ScorerConfig::validate() const {
  if (weights.relation < 0 || weights.tag < 0 || weights.prior < 0) throw Error("composite weights must be >= 0");
  if (order < 1) throw Error("n-gram order must be >= 1");
  if (!(k > 0)) throw Error("n-gram smoothing constant must be > 0");
  if (timeout_ms <= 0) throw Error("remote timeout must be > 0");
  if (max_in_flight < 1) throw Error("max_in_flight must be >= 1");
}

ScorerConfig ScorerConfig::from_json(const Json& j) {
  ScorerConfig c;
  if (j.contains("backend")) {
    auto b = parse_backend(j.at("backend").get<std::string>());
    if (!b) throw Error("unknown scorer backend " + j.at("backend").dump());
    c.backend = *b;
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.is_array()) {
      if (w.size() != 3) throw Error("weights must have three entries");
      c.weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
    } else {
      c.weights.relation = w.value("relation", c.weights.relation);
      c.weights.tag = w.value("tag", c.weights.tag);
      c.weights.prior = w.value("prior", c.weights.prior);
    }
  }
  c.order = j.value("order", c.order);
  c.k = j.value("k", c.k);
  if (j.contains("ngram_training")) {
    for (const auto& p : j.at("ngram_training")) c.ngram_training.emplace_back(p.get<std::string>());
  }
  c.endpoint = j.value("endpoint", c.endpoint);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.validate();
  return c;
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config, const StatsStore* store) {
  config.validate();
  switch (config.backend) {
    case Backend::composite:
      if (!store) throw Error("composite scorer needs a statistics store");
      return std::make_unique<CompositeScorer>(*store, config.weights);
    case Backend::ngram:
      if (config.ngram_training.empty()) throw Error("ngram scorer needs training files");
      return std::make_unique<NgramScorer>(train_ngram(config.ngram_training, config.order, config.k));
    case Backend::remote: {
      auto ep = parse_endpoint(config.endpoint);
      ep.timeout_ms = config.timeout_ms;
      ep.max_in_flight = config.max_in_flight;
      return std::make_unique<RemoteScorer>(ep);
    }
  }
  throw Error("unknown backend");
}

}  // namespace crs
