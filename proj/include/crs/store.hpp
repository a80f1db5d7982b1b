// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crs/corpus.hpp"
#include "crs/ingest.hpp"
#include "crs/mf.hpp"
#include "crs/stats.hpp"
#include "crs/tag_index.hpp"

namespace crs {

struct StoreOptions {
  std::uint64_t eligible_above = kEligibleAbove;
  double top_fraction = kTopFraction;
  std::size_t ranking_depth = kRankingDepth;
};

/// Everything probes, scorers and the chat service read. Immutable once
/// built or loaded; safe for concurrent readers.
struct StatsStore {
  Catalog catalog;
  std::vector<corpus::UserWindow> windows;
  CooccurrenceTable cooccurrence;
  PopularityIndex popularity;
  PmiRanking rankings;
  TagIndex tags;
  /// Reviews whose movie resolved against the catalog; movie_id is set.
  std::vector<Review> reviews;
  std::optional<MfModel> mf;
  StoreOptions options;

  /// Ratings of movies missing from the catalog are ignored. Reviews that do
  /// not resolve to a catalog movie are dropped.
  static StatsStore build(Catalog catalog, std::span<const RatingEvent> ratings,
                          std::span<const TagRelevance> tag_relevances, std::vector<Review> reviews,
                          StoreOptions options = {});
  static StatsStore build(Catalog catalog, std::vector<corpus::UserWindow> windows, TagIndex tags,
                          std::vector<Review> reviews, StoreOptions options = {});

  std::vector<corpus::LikedWindow> liked_windows() const;
};

/// Directory layout:
///   manifest.json      format tag, options, summary counts
///   catalog.jsonl      {"movie_id","title","genres"}
///   windows.jsonl      {"user","movies":[...]}
///   cooccurrence.jsonl {"a","b","count"} with a < b
///   popularity.jsonl   {"movie_id","count"}
///   rankings.jsonl     {"movie_id","related":[{"movie_id","pmi2","count"}...]}
///   tags.jsonl         {"movie_id","tags":[...]}
///   reviews.jsonl      {"review_id","movie_id","text","sentences"}
///   mf.json, mf_users.bin, mf_items.bin   (only after `mf train`)
void save_store(const StatsStore& store, const std::filesystem::path& dir);
/// Throws StoreError naming the missing path.
StatsStore load_store(const std::filesystem::path& dir);

void save_mf(const MfModel& model, const std::filesystem::path& dir);
std::optional<MfModel> load_mf(const std::filesystem::path& dir);

/// Binary factor matrix: 8-byte magic "CRSMAT01", then little-endian
/// uint64 rows, uint64 dim, uint64 seed, rows x int64 ids, rows x dim
/// float64 values (row-major).
struct FactorMatrix {
  std::vector<std::int64_t> ids;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
};
void write_factor_matrix(const std::filesystem::path& path, const FactorMatrix& m);
FactorMatrix read_factor_matrix(const std::filesystem::path& path);

}  // namespace crs
