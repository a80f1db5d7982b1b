// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crs/jsonl.hpp"
#include "crs/probes.hpp"
#include "crs/scoring.hpp"

namespace crs {

inline constexpr std::string_view kUnknownToken = "__unk__";

/// Replaces every `@ ... @` span, signs included, with __unk__.
/// Throws DelimiterError on an unbalanced `@`.
std::string mask_titles(std::string_view text);

/// Corpus BLEU on whitespace tokens, scaled to [0, 100]: geometric mean of
/// clipped n-gram precisions for n = 1..max_order times the brevity penalty
/// (1 when the candidate corpus is longer than the reference corpus, else
/// exp(1 - r/c)). No smoothing; any zero precision gives 0.
/// Throws crs::Error on an empty corpus or mismatched lengths.
double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
            std::size_t max_order = 4);

struct DialogueTurn {
  std::string conversation_id;
  std::size_t turn = 0;
  std::string text;
};

struct RecallResult {
  double percentage = 0.0;
  std::size_t matched = 0;
  std::size_t generated = 0;
  bool zero_denominator = false;
};

/// Generated mentions (from `@` spans) that match any title the human
/// recommender mentioned in the same conversation, over all generated
/// mentions corpus-wide. Titles compare lowercased and trimmed.
/// Throws crs::Error when a generated turn has no reference counterpart.
RecallResult recall_end_to_end(const std::vector<DialogueTurn>& generated,
                               const std::vector<DialogueTurn>& reference);

struct FamilyScore {
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t ties = 0;
  std::size_t unscored = 0;
  std::size_t scored() const { return successes + failures + ties; }
  /// successes / scored; 0 when nothing was scored.
  double score() const;
  bool operator==(const FamilyScore&) const = default;
};

struct ProbeOutcome {
  enum Kind { success, failure, tie, unscored } kind = unscored;
  double positive = 0.0;
  double negative = 0.0;
  std::string error;
};

struct ProbeSuiteOptions {
  /// Prepends "redial conversation:" to every probe input.
  bool prefix_task_label = true;
  std::size_t max_threads = 0;
};

struct ProbeSuiteResult {
  std::map<ProbeFamily, FamilyScore> families;
  std::vector<ProbeOutcome> outcomes;  // aligned with the probe list
};

/// Two-target families succeed iff L(T_pos | I) > L(T_neg | I); description
/// succeeds iff L(T | I_pos) > L(T | I_neg). Equal scores are ties.
/// Throws crs::Error on an empty probe list.
ProbeSuiteResult run_probe_suite(const std::vector<ProbeCase>& probes, const Scorer& scorer,
                                 const ProbeSuiteOptions& options = {});

/// Same metric with the MF baseline deciding each recommendation probe.
FamilyScore mf_probe_accuracy(const std::vector<ProbeCase>& probes, const MfModel& model);

struct EvalReport {
  std::string backend_id;
  std::uint64_t seed = 0;
  std::string timestamp;
  std::optional<double> bleu;
  std::optional<RecallResult> recall;
  std::map<ProbeFamily, FamilyScore> probes;

  Json to_json() const;
  static EvalReport from_json(const Json& j);
};

/// Fixed-width table, one row per report, one column per probe family.
std::string format_summary(const std::vector<EvalReport>& reports);

/// UTC ISO-8601. Uses SOURCE_DATE_EPOCH when set so reports are reproducible.
std::string timestamp_now();

void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

}  // namespace crs
