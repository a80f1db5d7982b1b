// SPDX-License-Identifier: Apache-2.0
#include "crs/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "crs/error.hpp"
#include "crs/rng.hpp"
#include "crs/text.hpp"

namespace crs {

std::string_view task_label(Task task) {
  switch (task) {
    case Task::redial: return "redial conversation:";
    case Task::sequence: return "movielens sequence:";
    case Task::tags: return "movielens tags:";
    case Task::review: return "movielens review:";
  }
  return "";
}

std::string_view task_file_stem(Task task) {
  switch (task) {
    case Task::redial: return "redial_conversation";
    case Task::sequence: return "movielens_sequence";
    case Task::tags: return "movielens_tags";
    case Task::review: return "movielens_review";
  }
  return "";
}

std::optional<Task> task_from_label(std::string_view label) {
  for (Task t : kAllTasks) {
    if (task_label(t) == label) return t;
  }
  return std::nullopt;
}

std::optional<Task> parse_task_name(std::string_view name) {
  static const std::map<std::string, Task, std::less<>> kShort = {
      {"redial", Task::redial}, {"sequence", Task::sequence}, {"sequences", Task::sequence},
      {"tags", Task::tags},     {"review", Task::review},     {"reviews", Task::review}};
  if (auto it = kShort.find(name); it != kShort.end()) return it->second;
  for (Task t : kAllTasks) {
    if (task_label(t) == name || task_file_stem(t) == name) return t;
  }
  return std::nullopt;
}

Json CorpusManifest::to_json() const {
  Json c = Json::object();
  for (const auto& [task, n] : counts) c[std::string(task_label(task))] = n;
  return {{"counts", c},
          {"mixed_count", mixed_count},
          {"mixing", mixing},
          {"seed", seed},
          {"max_input_tokens", kMaxInputTokens},
          {"max_target_tokens", kMaxTargetTokens},
          {"preprocessing", "lowercase"},
          {"hyperparameters",
           {{"model_size", hyperparameters.model_size},
            {"learning_rate", hyperparameters.learning_rate},
            {"steps", hyperparameters.steps},
            {"batch_size", hyperparameters.batch_size}}}};
}

CorpusManifest CorpusManifest::from_json(const Json& j) {
  CorpusManifest m;
  for (const auto& [label, n] : j.at("counts").items()) {
    auto task = task_from_label(label);
    if (!task) throw ParseError("unknown task label in manifest: " + label);
    m.counts[*task] = n.get<std::size_t>();
  }
  m.mixed_count = j.at("mixed_count").get<std::size_t>();
  m.mixing = j.at("mixing").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& hp = j.at("hyperparameters");
  m.hyperparameters.model_size = hp.at("model_size").get<std::string>();
  m.hyperparameters.learning_rate = hp.at("learning_rate").get<double>();
  m.hyperparameters.steps = hp.at("steps").get<int>();
  m.hyperparameters.batch_size = hp.at("batch_size").get<int>();
  return m;
}

namespace corpus {
namespace {

std::size_t input_budget(Task task) {
  return kMaxInputTokens - text::count_tokens(task_label(task));
}

std::string finish_target(std::string_view s) {
  return text::keep_first_tokens(text::to_lower(s), kMaxTargetTokens);
}

}  // namespace

std::vector<LikedWindow> liked_windows(std::span<const RatingEvent> ratings) {
  std::vector<LikedWindow> out;
  for (auto& w : liked_windows_by_user(ratings)) out.push_back(std::move(w.movies));
  return out;
}

std::vector<UserWindow> liked_windows_by_user(std::span<const RatingEvent> ratings) {
  std::map<UserId, std::vector<const RatingEvent*>> by_user;
  for (const auto& r : ratings) {
    if (r.rating > kLikedAbove) by_user[r.user_id].push_back(&r);
  }
  std::vector<UserWindow> windows;
  for (auto& [user, liked] : by_user) {
    std::stable_sort(liked.begin(), liked.end(), [](const RatingEvent* a, const RatingEvent* b) {
      if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
      return a->movie_id < b->movie_id;
    });
    LikedWindow current;
    std::unordered_set<MovieId> seen;
    for (const RatingEvent* r : liked) {
      // A re-rated movie counts once, at its first liked timestamp.
      if (!seen.insert(r->movie_id).second) continue;
      current.push_back(r->movie_id);
      if (current.size() == kWindowSize) {
        windows.push_back({user, std::move(current)});
        current.clear();
      }
    }
  }
  return windows;
}

std::string render_message(std::string_view raw, const std::map<std::string, std::string>& mentions) {
  std::string out;
  out.reserve(raw.size() + 32);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '@') {
      std::size_t j = i + 1;
      while (j < raw.size() && raw[j] >= '0' && raw[j] <= '9') ++j;
      if (j > i + 1) {
        auto it = mentions.find(std::string(raw.substr(i + 1, j - i - 1)));
        if (it != mentions.end()) {
          out += ' ';
          out += text::delimit_title(it->second);
          out += ' ';
          i = j - 1;
          continue;
        }
      }
    }
    out += raw[i];
  }
  return text::normalize_space(out);
}

std::vector<TrainingExample> build_redial_examples(const RedialConversation& conversation) {
  std::vector<TrainingExample> out;
  std::vector<std::string> turns;
  const std::size_t budget = input_budget(Task::redial);
  for (const auto& msg : conversation.messages) {
    std::string rendered = text::to_lower(render_message(msg.text, conversation.movie_mentions));
    if (msg.role == Role::recommender) {
      // Oldest turns go first when the context is over budget.
      std::size_t first = 0;
      std::size_t total = 0;
      for (const auto& t : turns) total += text::count_tokens(t);
      while (total > budget && first + 1 < turns.size()) {
        total -= text::count_tokens(turns[first]);
        ++first;
      }
      std::vector<std::string> kept(turns.begin() + static_cast<std::ptrdiff_t>(first), turns.end());
      std::string input = text::keep_last_tokens(text::join(kept, " "), budget);
      out.push_back({Task::redial, std::move(input), finish_target(rendered)});
    }
    std::string tagged = msg.role == Role::seeker ? "[user]" : "[assistant]";
    if (!rendered.empty()) tagged += " " + rendered;
    turns.push_back(std::move(tagged));
  }
  return out;
}

std::vector<TrainingExample> build_sequence_examples(const std::vector<LikedWindow>& windows,
                                                     const Catalog& catalog) {
  std::vector<TrainingExample> out;
  const std::size_t budget = input_budget(Task::sequence);
  for (const auto& window : windows) {
    std::vector<std::string> titles;
    titles.reserve(window.size());
    for (MovieId id : window) {
      if (catalog.find(id)) titles.push_back(catalog.title(id));
    }
    for (std::size_t n = 1; n < titles.size(); ++n) {
      std::size_t first = 0;
      auto render = [&](std::size_t from) {
        std::string s = "@";
        for (std::size_t i = from; i < n; ++i) s += " " + titles[i] + " @";
        return s;
      };
      std::string input = render(first);
      while (text::count_tokens(input) > budget && first + 1 < n) input = render(++first);
      out.push_back({Task::sequence, std::move(input), finish_target(titles[n])});
    }
  }
  return out;
}

std::vector<TrainingExample> build_sequence_examples(std::span<const RatingEvent> ratings,
                                                     const Catalog& catalog) {
  std::vector<RatingEvent> known;
  known.reserve(ratings.size());
  for (const auto& r : ratings) {
    if (catalog.find(r.movie_id)) known.push_back(r);
  }
  return build_sequence_examples(liked_windows(known), catalog);
}

std::vector<TrainingExample> build_tag_examples(const TagIndex& tags, const Catalog& catalog,
                                                std::uint64_t seed, TagExampleOptions options) {
  std::vector<TrainingExample> out;
  const std::size_t budget = input_budget(Task::tags);
  for (const auto& [movie, tag_set] : tags.by_movie()) {
    if (tag_set.empty() || !catalog.find(movie)) continue;
    std::vector<std::string> list(tag_set.begin(), tag_set.end());
    Rng rng(derive_seed(seed, "tag-examples", static_cast<std::uint64_t>(movie)));
    const std::size_t cap = std::min(options.max_tags, list.size());
    for (std::size_t e = 0; e < options.per_movie; ++e) {
      const auto k = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(options.max_tags)));
      std::vector<std::string> picked;
      for (std::size_t idx : rng.sample_indices(list.size(), std::min(k, cap))) picked.push_back(list[idx]);
      out.push_back({Task::tags, text::keep_first_tokens(text::join(picked, ", "), budget),
                     finish_target(catalog.title(movie))});
    }
  }
  return out;
}

std::optional<std::string> review_title(const Review& review, const Catalog& catalog) {
  if (review.movie_id && catalog.find(*review.movie_id)) return catalog.title(*review.movie_id);
  if (!review.title.empty()) return text::to_lower(text::trim(review.title));
  return std::nullopt;
}

std::string clean_review_sentence(std::string_view sentence) {
  std::string clean;
  clean.reserve(sentence.size());
  for (char c : text::to_lower(sentence)) {
    if (c == '@') {
      clean += " at ";
    } else {
      clean += c;
    }
  }
  return text::normalize_space(clean);
}

std::vector<TrainingExample> build_review_examples(std::span<const Review> reviews,
                                                   const Catalog& catalog) {
  std::vector<TrainingExample> out;
  const std::size_t budget = input_budget(Task::review);
  for (const auto& review : reviews) {
    auto title = review_title(review, catalog);
    if (!title) continue;
    std::vector<std::string> sentences = review.sentences;
    if (sentences.empty()) sentences = text::split_sentences(review.text);
    if (sentences.empty()) continue;
    for (auto& s : sentences) s = clean_review_sentence(s);
    const std::string prompt = "review for " + text::delimit_title(*title) + ":";
    const std::size_t prompt_tokens = text::count_tokens(prompt);
    const std::size_t body_budget = budget > prompt_tokens ? budget - prompt_tokens : 0;
    std::string body;
    for (std::size_t t = 0; t < sentences.size(); ++t) {
      std::string input = prompt;
      if (!body.empty()) {
        std::string kept = text::keep_last_tokens(body, body_budget);
        if (!kept.empty()) input += " " + kept;
      }
      out.push_back({Task::review, std::move(input), finish_target(sentences[t])});
      if (!body.empty()) body += ' ';
      body += sentences[t];
    }
  }
  return out;
}

std::vector<TrainingExample> interleave(const std::map<Task, std::vector<TrainingExample>>& corpora,
                                        std::uint64_t seed) {
  std::vector<std::vector<TrainingExample>> queues;
  for (Task t : kAllTasks) {
    auto it = corpora.find(t);
    if (it == corpora.end() || it->second.empty()) continue;
    auto shuffled = it->second;
    Rng rng(derive_seed(seed, "mix", static_cast<std::uint64_t>(t)));
    rng.shuffle(shuffled);
    queues.push_back(std::move(shuffled));
  }
  std::vector<TrainingExample> out;
  std::vector<std::size_t> cursor(queues.size(), 0);
  bool any = true;
  while (any) {
    any = false;
    for (std::size_t q = 0; q < queues.size(); ++q) {
      if (cursor[q] < queues[q].size()) {
        out.push_back(queues[q][cursor[q]++]);
        any = true;
      }
    }
  }
  return out;
}

Json example_to_json(const TrainingExample& example) {
  std::string input(task_label(example.task));
  if (!example.input.empty()) input += " " + example.input;
  return {{"task", task_label(example.task)}, {"input", input}, {"target", example.target}};
}

TrainingExample example_from_json(const Json& j) {
  const auto label = j.at("task").get<std::string>();
  auto task = task_from_label(label);
  if (!task) throw ParseError("unknown task label: " + label);
  std::string input = j.at("input").get<std::string>();
  if (input == label) {
    input.clear();
  } else if (input.rfind(label + " ", 0) == 0) {
    input.erase(0, label.size() + 1);
  } else {
    throw ParseError("input does not start with its task label");
  }
  return {*task, std::move(input), j.at("target").get<std::string>()};
}

ExportResult mix_and_export(const std::map<Task, std::vector<TrainingExample>>& corpora,
                            const std::filesystem::path& out_dir, std::uint64_t seed,
                            const FineTuneHyperparameters& hyperparameters) {
  std::filesystem::create_directories(out_dir);
  ExportResult result;
  result.manifest.seed = seed;
  result.manifest.hyperparameters = hyperparameters;

  auto write = [](const std::filesystem::path& path, const std::vector<TrainingExample>& examples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExportError("cannot write " + path.string());
    for (const auto& e : examples) jsonl::write_line(out, example_to_json(e));
    out.close();
    if (!out) throw ExportError("write failed for " + path.string());
  };

  for (const auto& [task, examples] : corpora) {
    for (const auto& e : examples) {
      if (e.task != task) throw ExportError("example filed under the wrong task");
    }
    auto path = out_dir / (std::string(task_file_stem(task)) + ".jsonl");
    write(path, examples);
    result.task_files[task] = path;
    result.manifest.counts[task] = examples.size();
  }
  auto mixed = interleave(corpora, seed);
  result.mixed_file = out_dir / "mixed.jsonl";
  write(result.mixed_file, mixed);
  result.manifest.mixed_count = mixed.size();

  for (const auto& [task, path] : result.task_files) {
    if (jsonl::count_lines(path) != result.manifest.counts[task]) {
      throw ExportError("line count mismatch in " + path.string());
    }
  }
  if (jsonl::count_lines(result.mixed_file) != result.manifest.mixed_count) {
    throw ExportError("line count mismatch in " + result.mixed_file.string());
  }

  result.manifest_file = out_dir / "manifest.json";
  std::ofstream mf(result.manifest_file, std::ios::binary | std::ios::trunc);
  if (!mf) throw ExportError("cannot write " + result.manifest_file.string());
  mf << result.manifest.to_json().dump(2) << '\n';
  return result;
}

std::vector<TrainingExample> load_examples(const std::filesystem::path& path) {
  std::vector<TrainingExample> out;
  for (const auto& j : jsonl::read_file(path)) out.push_back(example_from_json(j));
  return out;
}

}  // namespace corpus
}  // namespace crs
