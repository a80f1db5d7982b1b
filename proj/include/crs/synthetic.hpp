// SPDX-License-Identifier: Apache-2.0
#pragma once

// Planted datasets for tests, demos and the acceptance suite. Movies fall
// into clusters; users like mostly inside one cluster, so co-occurrence is
// strong within a cluster and weak across. Every cluster has a theme tag
// carried by all of its movies, plus sparser style tags.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "crs/ingest.hpp"

namespace crs::synth {

struct Options {
  std::uint64_t seed = 42;
  std::size_t clusters = 6;
  std::size_t movies_per_cluster = 12;
  std::size_t rare_movies = 8;  // liked by few users, never eligible
  std::size_t users = 900;
  std::size_t min_likes = 20;
  std::size_t max_likes = 40;
  double noise = 0.05;           // chance a like falls outside the home cluster
  double zipf_exponent = 0.8;    // popularity skew within a cluster
  std::size_t dislikes = 6;      // ratings <= 4.0 per user
  std::size_t reviews_per_movie = 2;
  std::size_t conversations = 50;
};

struct Dataset {
  std::vector<MovieRecord> movies;
  std::vector<RatingEvent> ratings;
  std::vector<TagRelevance> tag_relevances;
  std::vector<Review> reviews;
  std::vector<RedialConversation> conversations;
  /// Raw ReDial-format records (worker ids, `@key` mentions).
  std::vector<Json> redial_records;
  std::map<MovieId, int> cluster_of;  // -1 for rare movies
  std::vector<std::string> theme_tags;
  std::vector<std::string> style_tags;
};

Dataset generate(const Options& options = {});

/// movies.csv, ratings.csv, genome-scores.csv, genome-tags.csv,
/// reviews.jsonl, redial.jsonl
void write(const Dataset& data, const std::filesystem::path& dir);

}  // namespace crs::synth
