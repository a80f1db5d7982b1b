// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crs/ingest.hpp"

namespace crs {

inline constexpr double kTagRelevanceThreshold = 0.8;

/// movie -> tags with relevance strictly above the threshold, and its
/// transpose tag -> movies. Tags are stored lowercased.
class TagIndex {
 public:
  TagIndex() = default;
  static TagIndex build(std::span<const TagRelevance> relevances,
                        double threshold = kTagRelevanceThreshold);

  void add(MovieId movie, const std::string& tag);

  const std::set<std::string>& tags_of(MovieId movie) const;
  const std::set<MovieId>& movies_with(const std::string& tag) const;
  bool has(MovieId movie, const std::string& tag) const;

  const std::map<MovieId, std::set<std::string>>& by_movie() const { return by_movie_; }
  const std::map<std::string, std::set<MovieId>>& by_tag() const { return by_tag_; }

  /// Tag vocabulary ordered longest first (then lexicographic), the order
  /// text::match_phrases expects.
  std::vector<std::string> vocabulary_longest_first() const;

 private:
  std::map<MovieId, std::set<std::string>> by_movie_;
  std::map<std::string, std::set<MovieId>> by_tag_;
};

}  // namespace crs
