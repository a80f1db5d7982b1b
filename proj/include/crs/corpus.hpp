// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crs/ingest.hpp"
#include "crs/jsonl.hpp"
#include "crs/tag_index.hpp"

namespace crs {

enum class Task { redial, sequence, tags, review };

inline constexpr std::array<Task, 4> kAllTasks = {Task::redial, Task::sequence, Task::tags,
                                                  Task::review};

/// "redial conversation:", "movielens sequence:", "movielens tags:",
/// "movielens review:".
std::string_view task_label(Task task);
std::string_view task_file_stem(Task task);
std::optional<Task> task_from_label(std::string_view label);
/// Accepts a label, a file stem, or a short name (redial, sequence, tags, review).
std::optional<Task> parse_task_name(std::string_view name);

/// Input and target are stored lowercased and without the task label;
/// export prepends the label exactly once.
struct TrainingExample {
  Task task = Task::redial;
  std::string input;
  std::string target;
  bool operator==(const TrainingExample&) const = default;
};

inline constexpr std::size_t kMaxInputTokens = 512;   // after the label is prepended
inline constexpr std::size_t kMaxTargetTokens = 128;

struct FineTuneHyperparameters {
  std::string model_size = "base, 220M";
  double learning_rate = 0.003;
  int steps = 40000;
  int batch_size = 128;
};

struct CorpusManifest {
  std::map<Task, std::size_t> counts;
  std::size_t mixed_count = 0;
  std::string mixing = "equal";
  std::uint64_t seed = 0;
  FineTuneHyperparameters hyperparameters;

  Json to_json() const;
  static CorpusManifest from_json(const Json& j);
};

namespace corpus {

inline constexpr double kLikedAbove = 4.0;  // strict
inline constexpr std::size_t kWindowSize = 10;

/// Timestamp-ordered movies one user rated above 4.0, cut into
/// non-overlapping windows of ten; a trailing partial window is dropped.
using LikedWindow = std::vector<MovieId>;

std::vector<LikedWindow> liked_windows(std::span<const RatingEvent> ratings);

struct UserWindow {
  UserId user = 0;
  LikedWindow movies;
  bool operator==(const UserWindow&) const = default;
};

/// Same windows as liked_windows, keeping the owning user (users ascending).
std::vector<UserWindow> liked_windows_by_user(std::span<const RatingEvent> ratings);

/// Replaces `@<digits>` mention keys with `@ title @` and collapses
/// whitespace. Keys without a mapping are left as they are.
std::string render_message(std::string_view raw, const std::map<std::string, std::string>& mentions);

/// One example per recommender message: all prior messages tagged
/// `[user]`/`[assistant]` as input, the message itself as target.
std::vector<TrainingExample> build_redial_examples(const RedialConversation& conversation);

/// For each window and prefix length n in [1, 9]: `@ t1 @ ... @ tn @` ->
/// title n+1. Movies missing from the catalog are dropped before windowing.
std::vector<TrainingExample> build_sequence_examples(const std::vector<LikedWindow>& windows,
                                                     const Catalog& catalog);
std::vector<TrainingExample> build_sequence_examples(std::span<const RatingEvent> ratings,
                                                     const Catalog& catalog);

struct TagExampleOptions {
  std::size_t per_movie = 3;
  std::size_t max_tags = 5;
};

std::vector<TrainingExample> build_tag_examples(const TagIndex& tags, const Catalog& catalog,
                                                std::uint64_t seed, TagExampleOptions options = {});

/// Catalog title for the review's movie id, else its own title; nullopt if
/// neither resolves.
std::optional<std::string> review_title(const Review& review, const Catalog& catalog);

/// Lowercased, whitespace-collapsed sentence with stray `@` turned into "at".
std::string clean_review_sentence(std::string_view sentence);

/// Next-sentence examples for truncation points t = 0 .. len-1. Only the
/// prompt title is `@`-delimited; stray `@` in the body become "at".
std::vector<TrainingExample> build_review_examples(std::span<const Review> reviews,
                                                   const Catalog& catalog);

/// Round-robin over tasks (fixed task order), each task's examples shuffled
/// under the seed; exhausted tasks drop out of the rotation.
std::vector<TrainingExample> interleave(const std::map<Task, std::vector<TrainingExample>>& corpora,
                                        std::uint64_t seed);

Json example_to_json(const TrainingExample& example);
TrainingExample example_from_json(const Json& j);

struct ExportResult {
  CorpusManifest manifest;
  std::map<Task, std::filesystem::path> task_files;
  std::filesystem::path mixed_file;
  std::filesystem::path manifest_file;
};

/// Writes `<stem>.jsonl` per task, `mixed.jsonl`, and `manifest.json`, then
/// re-counts the written lines; a mismatch throws ExportError.
ExportResult mix_and_export(const std::map<Task, std::vector<TrainingExample>>& corpora,
                            const std::filesystem::path& out_dir, std::uint64_t seed,
                            const FineTuneHyperparameters& hyperparameters = {});

std::vector<TrainingExample> load_examples(const std::filesystem::path& path);

}  // namespace corpus
}  // namespace crs
