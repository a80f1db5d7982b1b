// SPDX-License-Identifier: Apache-2.0
#include "crs/tag_index.hpp"

#include <algorithm>

#include "crs/text.hpp"

namespace crs {
namespace {
const std::set<std::string> kNoTags;
const std::set<MovieId> kNoMovies;
}  // namespace

TagIndex TagIndex::build(std::span<const TagRelevance> relevances, double threshold) {
  TagIndex index;
  for (const auto& r : relevances) {
    if (r.relevance > threshold) index.add(r.movie_id, r.tag);
  }
  return index;
}

void TagIndex::add(MovieId movie, const std::string& tag) {
  std::string t = text::to_lower(text::trim(tag));
  if (t.empty()) return;
  by_movie_[movie].insert(t);
  by_tag_[t].insert(movie);
}

const std::set<std::string>& TagIndex::tags_of(MovieId movie) const {
  auto it = by_movie_.find(movie);
  return it == by_movie_.end() ? kNoTags : it->second;
}

const std::set<MovieId>& TagIndex::movies_with(const std::string& tag) const {
  auto it = by_tag_.find(tag);
  return it == by_tag_.end() ? kNoMovies : it->second;
}

bool TagIndex::has(MovieId movie, const std::string& tag) const {
  return tags_of(movie).count(tag) > 0;
}

std::vector<std::string> TagIndex::vocabulary_longest_first() const {
  std::vector<std::string> vocab;
  vocab.reserve(by_tag_.size());
  for (const auto& [tag, movies] : by_tag_) vocab.push_back(tag);
  std::stable_sort(vocab.begin(), vocab.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  return vocab;
}

}  // namespace crs
