// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crs/jsonl.hpp"
#include "crs/store.hpp"

namespace crs {

enum class ProbeFamily { recommendation, attribute, combination, description };

inline constexpr ProbeFamily kAllFamilies[] = {ProbeFamily::recommendation, ProbeFamily::attribute,
                                               ProbeFamily::combination, ProbeFamily::description};

std::string_view family_name(ProbeFamily family);
/// Accepts full names and rec / attr / combo / desc.
std::optional<ProbeFamily> parse_family(std::string_view name);

struct ProbeMetadata {
  std::optional<MovieId> query_movie;
  std::optional<std::string> tag;
  MovieId positive_movie = 0;
  MovieId negative_movie = 0;
  std::optional<std::string> review_id;
  bool operator==(const ProbeMetadata&) const = default;
};

/// recommendation / attribute / combination: one input, two targets.
/// description: two inputs, one target. `positive_index` selects the
/// related target (or input, for description).
struct ProbeCase {
  ProbeFamily family = ProbeFamily::recommendation;
  std::vector<std::string> inputs;
  std::vector<std::string> targets;
  std::size_t positive_index = 0;
  ProbeMetadata metadata;
  bool operator==(const ProbeCase&) const = default;
};

/// `{movie}` and `{tag}` are substituted; output is lowercased.
struct ProbeTemplates {
  std::string recommendation = "[user] can you recommend me a movie like @ {movie} @";
  std::string attribute = "[user] can you recommend me a {tag} movie?";
  std::string combination = "[user] can you recommend me a {tag} movie like @ {movie} @?";
  std::string description = "[user] what is your opinion on @ {movie} @?";
  std::string answer = "sure, have you seen @ {movie} @?";

  static ProbeTemplates from_json(const Json& j);
};

std::string render_template(std::string_view pattern, std::string_view movie, std::string_view tag = {});

struct ProbeOptions {
  std::uint64_t seed = 13;
  std::size_t neighbors = 10;
  std::size_t snippet_sentences = 4;
  ProbeTemplates templates;
};

struct ProbeSet {
  std::vector<ProbeCase> cases;
  /// Probes dropped because no top-decile movie qualified as the negative.
  std::size_t skipped_no_negative = 0;
};

ProbeSet gen_recommendation_probes(const StatsStore& store, const ProbeOptions& options);
ProbeSet gen_attribute_probes(const StatsStore& store, const ProbeOptions& options);
ProbeSet gen_combination_probes(const StatsStore& store, const ProbeOptions& options);
ProbeSet gen_description_probes(const StatsStore& store, const ProbeOptions& options);
ProbeSet gen_probes(const StatsStore& store, ProbeFamily family, const ProbeOptions& options);

/// Review snippet used as the description-probe target.
std::string review_snippet(const Review& review, std::size_t max_sentences);

/// Structural and sampling constraints a probe must satisfy against the
/// store; returns human-readable violations (empty when the probe is valid).
std::vector<std::string> audit_probe(const ProbeCase& probe, const StatsStore& store,
                                     const ProbeOptions& options);

Json probe_to_json(const ProbeCase& probe);
ProbeCase probe_from_json(const Json& j);
void write_probes(const std::filesystem::path& path, const std::vector<ProbeCase>& probes);
std::vector<ProbeCase> read_probes(const std::filesystem::path& path);

}  // namespace crs
