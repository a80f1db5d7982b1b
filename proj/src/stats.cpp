// SPDX-License-Identifier: Apache-2.0
#include "crs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "crs/error.hpp"

namespace crs {
namespace {

struct PairHash {
  std::size_t operator()(const std::pair<MovieId, MovieId>& p) const noexcept {
    auto h = static_cast<std::uint64_t>(p.first) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(p.second) + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

const std::vector<CooccurrenceEntry> kNoNeighbors;
const std::vector<RelatedMovie> kNoRelated;

}  // namespace

CooccurrenceTable CooccurrenceTable::build(const std::vector<corpus::LikedWindow>& windows) {
  std::unordered_map<std::pair<MovieId, MovieId>, std::uint64_t, PairHash> counts;
  for (const auto& window : windows) {
    std::vector<MovieId> distinct(window.begin(), window.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      for (std::size_t j = i + 1; j < distinct.size(); ++j) ++counts[{distinct[i], distinct[j]}];
    }
  }
  CooccurrenceTable table;
  for (const auto& [pair, n] : counts) table.add(pair.first, pair.second, n);
  table.finalize();
  return table;
}

void CooccurrenceTable::add(MovieId a, MovieId b, std::uint64_t n) {
  if (a == b || n == 0) return;
  adjacency_[a].push_back({b, n});
  adjacency_[b].push_back({a, n});
  marginals_[a] += n;
  marginals_[b] += n;
  total_ += n;
  sorted_ = false;
}

void CooccurrenceTable::finalize() {
  if (sorted_) return;
  for (auto& [movie, list] : adjacency_) {
    std::sort(list.begin(), list.end(),
              [](const CooccurrenceEntry& x, const CooccurrenceEntry& y) { return x.other < y.other; });
    std::vector<CooccurrenceEntry> merged;
    merged.reserve(list.size());
    for (const auto& e : list) {
      if (!merged.empty() && merged.back().other == e.other) {
        merged.back().count += e.count;
      } else {
        merged.push_back(e);
      }
    }
    list = std::move(merged);
  }
  sorted_ = true;
}

std::uint64_t CooccurrenceTable::count(MovieId a, MovieId b) const {
  const auto& list = neighbors(a);
  auto it = std::lower_bound(list.begin(), list.end(), b,
                             [](const CooccurrenceEntry& e, MovieId id) { return e.other < id; });
  return it != list.end() && it->other == b ? it->count : 0;
}

std::uint64_t CooccurrenceTable::marginal(MovieId a) const {
  auto it = marginals_.find(a);
  return it == marginals_.end() ? 0 : it->second;
}

const std::vector<CooccurrenceEntry>& CooccurrenceTable::neighbors(MovieId a) const {
  if (!sorted_) throw Error("co-occurrence table used before finalize()");
  auto it = adjacency_.find(a);
  return it == adjacency_.end() ? kNoNeighbors : it->second;
}

std::vector<MovieId> CooccurrenceTable::movies() const {
  std::vector<MovieId> out;
  out.reserve(adjacency_.size());
  for (const auto& [m, list] : adjacency_) out.push_back(m);
  return out;
}

std::size_t CooccurrenceTable::distinct_pairs() const {
  std::size_t n = 0;
  for (const auto& [m, list] : adjacency_) n += list.size();
  return n / 2;
}

double pmi2(MovieId a, MovieId b, const CooccurrenceTable& table) {
  const std::uint64_t c = table.count(a, b);
  if (c == 0) {
    throw Error("PMI^2 undefined for movies " + std::to_string(a) + " and " + std::to_string(b) +
                " that never co-occur");
  }
  const double t = static_cast<double>(table.total());
  const double p_ab = static_cast<double>(c) / t;
  const double p_a = static_cast<double>(table.marginal(a)) / (2.0 * t);
  const double p_b = static_cast<double>(table.marginal(b)) / (2.0 * t);
  return std::log(p_ab * p_ab / (p_a * p_b));
}

std::pair<double, double> pmi2_range(const CooccurrenceTable& table) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [a, list] : table.adjacency()) {
    for (const auto& e : list) {
      if (e.other <= a) continue;
      const double v = pmi2(a, e.other, table);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (lo > hi) return {0.0, 0.0};
  return {lo, hi};
}

PopularityIndex PopularityIndex::build(const std::vector<corpus::LikedWindow>& windows,
                                       std::uint64_t eligible_above, double top_fraction) {
  std::map<MovieId, std::uint64_t> counts;
  for (const auto& w : windows) {
    for (MovieId m : w) ++counts[m];
  }
  return from_counts(std::move(counts), eligible_above, top_fraction);
}

PopularityIndex PopularityIndex::from_counts(std::map<MovieId, std::uint64_t> counts,
                                             std::uint64_t eligible_above, double top_fraction) {
  PopularityIndex p;
  p.counts_ = std::move(counts);
  p.eligible_above_ = eligible_above;
  p.top_fraction_ = top_fraction;
  for (const auto& [m, n] : p.counts_) {
    p.max_count_ = std::max(p.max_count_, n);
    if (n > eligible_above) p.eligible_.push_back(m);
  }
  p.top_ = p.eligible_;
  std::stable_sort(p.top_.begin(), p.top_.end(), [&](MovieId a, MovieId b) {
    return p.counts_.at(a) > p.counts_.at(b);
  });
  const auto keep = static_cast<std::size_t>(
      std::ceil(top_fraction * static_cast<double>(p.eligible_.size()) - 1e-9));
  p.top_.resize(std::min(keep, p.top_.size()));
  p.top_sorted_ = p.top_;
  std::sort(p.top_sorted_.begin(), p.top_sorted_.end());
  return p;
}

std::uint64_t PopularityIndex::count(MovieId m) const {
  auto it = counts_.find(m);
  return it == counts_.end() ? 0 : it->second;
}

bool PopularityIndex::eligible(MovieId m) const { return count(m) > eligible_above_; }

bool PopularityIndex::in_top_decile(MovieId m) const {
  return std::binary_search(top_sorted_.begin(), top_sorted_.end(), m);
}

std::vector<RelatedMovie> rank_neighbors(MovieId a, std::size_t k, const CooccurrenceTable& table,
                                         const PopularityIndex& popularity, const Catalog* catalog) {
  std::vector<RelatedMovie> out;
  for (const auto& e : table.neighbors(a)) {
    if (!popularity.eligible(e.other)) continue;
    out.push_back({e.other, pmi2(a, e.other, table), e.count});
  }
  auto title_of = [&](MovieId m) -> std::string {
    if (catalog && catalog->find(m)) return catalog->title(m);
    return {};
  };
  std::sort(out.begin(), out.end(), [&](const RelatedMovie& x, const RelatedMovie& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.count != y.count) return x.count > y.count;
    if (catalog) {
      const auto tx = title_of(x.movie);
      const auto ty = title_of(y.movie);
      if (tx != ty) return tx < ty;
    }
    return x.movie < y.movie;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<RelatedMovie> top_related(MovieId a, std::size_t k, const CooccurrenceTable& table,
                                      const PopularityIndex& popularity, const Catalog* catalog) {
  if (!popularity.eligible(a)) {
    throw Error("movie " + std::to_string(a) + " is not probe-eligible (occurs " +
                std::to_string(popularity.count(a)) + " times)");
  }
  return rank_neighbors(a, k, table, popularity, catalog);
}

PmiRanking PmiRanking::build(const CooccurrenceTable& table, const PopularityIndex& popularity,
                             const Catalog* catalog, std::size_t depth) {
  PmiRanking r;
  r.depth_ = depth;
  for (MovieId m : popularity.eligible_movies()) {
    r.lists_[m] = top_related(m, depth, table, popularity, catalog);
  }
  return r;
}

void PmiRanking::set(MovieId movie, std::vector<RelatedMovie> related) {
  lists_[movie] = std::move(related);
}

const std::vector<RelatedMovie>& PmiRanking::of(MovieId movie) const {
  auto it = lists_.find(movie);
  return it == lists_.end() ? kNoRelated : it->second;
}

bool PmiRanking::contains(MovieId query, MovieId candidate) const {
  const auto& list = of(query);
  return std::any_of(list.begin(), list.end(),
                     [&](const RelatedMovie& r) { return r.movie == candidate; });
}

}  // namespace crs
