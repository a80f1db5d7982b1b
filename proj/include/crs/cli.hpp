// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crs/ingest.hpp"

namespace crs::cli {

/// Raw inputs found in a data directory. Files that are absent stay empty;
/// `present` records which were read.
struct RawData {
  std::vector<MovieRecord> movies;
  std::vector<RatingEvent> ratings;
  std::vector<TagRelevance> tag_relevances;
  std::vector<Review> reviews;
  std::vector<RedialConversation> conversations;
  std::vector<std::string> present;
  std::vector<std::string> problems;  // "file:line: message"
};

/// Reads movies.csv, ratings.csv, genome-scores.csv + genome-tags.csv,
/// reviews.jsonl and redial.jsonl from `dir`.
RawData load_data_dir(const std::filesystem::path& dir);

/// Entry point behind the `crs` binary. Returns the process exit status.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace crs::cli
