// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "crs/corpus.hpp"
#include "crs/ingest.hpp"

namespace crs {

struct CooccurrenceEntry {
  MovieId other = 0;
  std::uint64_t count = 0;
};

/// Unordered pair counts over liked windows. Every distinct pair inside a
/// window is one pair event; marginals count pair-event endpoints, so
/// sum_a c(a) = 2T.
class CooccurrenceTable {
 public:
  static CooccurrenceTable build(const std::vector<corpus::LikedWindow>& windows);

  /// Adds `n` events for the unordered pair {a, b}; a == b is ignored.
  void add(MovieId a, MovieId b, std::uint64_t n = 1);
  /// Sorts adjacency lists; call after a series of add().
  void finalize();

  std::uint64_t count(MovieId a, MovieId b) const;
  std::uint64_t marginal(MovieId a) const;
  std::uint64_t total() const { return total_; }

  /// Neighbors of `a` with c(a, b) > 0, ascending by id.
  const std::vector<CooccurrenceEntry>& neighbors(MovieId a) const;
  std::vector<MovieId> movies() const;
  std::size_t distinct_pairs() const;

  const std::map<MovieId, std::vector<CooccurrenceEntry>>& adjacency() const { return adjacency_; }

 private:
  std::map<MovieId, std::vector<CooccurrenceEntry>> adjacency_;
  std::map<MovieId, std::uint64_t> marginals_;
  std::uint64_t total_ = 0;
  bool sorted_ = true;
};

/// log(p(a,b)^2 / (p(a) p(b))) with p(a,b) = c(a,b)/T and p(x) = c(x)/(2T).
/// Throws crs::Error when c(a, b) = 0.
double pmi2(MovieId a, MovieId b, const CooccurrenceTable& table);

inline constexpr std::uint64_t kEligibleAbove = 30;  // strictly more occurrences
inline constexpr double kTopFraction = 0.1;

/// Occurrences of each movie across liked windows, the probe-eligible set
/// (count > 30), and the popularity top decile of that set.
class PopularityIndex {
 public:
  static PopularityIndex build(const std::vector<corpus::LikedWindow>& windows,
                               std::uint64_t eligible_above = kEligibleAbove,
                               double top_fraction = kTopFraction);
  static PopularityIndex from_counts(std::map<MovieId, std::uint64_t> counts,
                                     std::uint64_t eligible_above = kEligibleAbove,
                                     double top_fraction = kTopFraction);

  std::uint64_t count(MovieId m) const;
  bool eligible(MovieId m) const;
  bool in_top_decile(MovieId m) const;

  /// Ascending by id.
  const std::vector<MovieId>& eligible_movies() const { return eligible_; }
  /// Descending by count, then ascending id; size ceil(top_fraction * |eligible|).
  const std::vector<MovieId>& top_decile() const { return top_; }
  const std::map<MovieId, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t max_count() const { return max_count_; }
  std::uint64_t eligible_above() const { return eligible_above_; }
  double top_fraction() const { return top_fraction_; }

 private:
  std::map<MovieId, std::uint64_t> counts_;
  std::vector<MovieId> eligible_;
  std::vector<MovieId> top_;
  std::vector<MovieId> top_sorted_;  // for membership tests
  std::uint64_t max_count_ = 0;
  std::uint64_t eligible_above_ = kEligibleAbove;
  double top_fraction_ = kTopFraction;
};

struct RelatedMovie {
  MovieId movie = 0;
  double score = 0.0;  // PMI^2
  std::uint64_t count = 0;
  bool operator==(const RelatedMovie&) const = default;
};

/// Highest-PMI^2 eligible neighbors of `a`; ties by larger c(a,b), then by
/// title (catalog, when given) and id. No eligibility check on `a` itself.
std::vector<RelatedMovie> rank_neighbors(MovieId a, std::size_t k, const CooccurrenceTable& table,
                                         const PopularityIndex& popularity,
                                         const Catalog* catalog = nullptr);

/// rank_neighbors for an eligible movie; throws crs::Error otherwise.
std::vector<RelatedMovie> top_related(MovieId a, std::size_t k, const CooccurrenceTable& table,
                                      const PopularityIndex& popularity,
                                      const Catalog* catalog = nullptr);

inline constexpr std::size_t kRankingDepth = 10;

/// Precomputed top-k lists for every eligible movie.
class PmiRanking {
 public:
  static PmiRanking build(const CooccurrenceTable& table, const PopularityIndex& popularity,
                          const Catalog* catalog = nullptr, std::size_t depth = kRankingDepth);

  void set(MovieId movie, std::vector<RelatedMovie> related);
  /// Empty list for movies without a ranking.
  const std::vector<RelatedMovie>& of(MovieId movie) const;
  bool contains(MovieId query, MovieId candidate) const;
  const std::map<MovieId, std::vector<RelatedMovie>>& lists() const { return lists_; }
  std::size_t depth() const { return depth_; }

 private:
  std::map<MovieId, std::vector<RelatedMovie>> lists_;
  std::size_t depth_ = kRankingDepth;
};

/// min and max PMI^2 over all pairs with c > 0; {0, 0} for an empty table.
std::pair<double, double> pmi2_range(const CooccurrenceTable& table);

}  // namespace crs
