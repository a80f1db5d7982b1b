// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crs/jsonl.hpp"
#include "crs/store.hpp"

namespace crs {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log L(target | input). Finite and <= 0, or -inf; never NaN.
struct ScoreResult {
  double log_likelihood = 0.0;
  std::string backend_id;
};

struct ScorePair {
  std::string input;
  std::string target;
};

struct BatchScore {
  std::optional<ScoreResult> result;
  std::string error;  // set when result is empty
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  /// Throws ScoringError when the backend cannot produce a value.
  virtual ScoreResult score(std::string_view input, std::string_view target) const = 0;
  /// Results in request order. The default fans out over `max_threads`
  /// workers and converts per-pair errors into BatchScore::error.
  virtual std::vector<BatchScore> score_batch(std::span<const ScorePair> pairs,
                                              std::size_t max_threads = 0) const;
};

struct CompositeWeights {
  double relation = 0.5;
  double tag = 0.4;
  double prior = 0.1;
};

/// Stand-in scorer over the statistics store:
///   s = (w1 * relation + w2 * tag_overlap + w3 * prior) / (w1 + w2 + w3)
///   log-likelihood = log(s), or -inf when s = 0.
/// relation: max PMI^2 between an input movie and a target movie, min-max
/// normalized over the table. tag_overlap: fraction of input tags the target
/// movie carries. prior: log(1 + count) / log(1 + max count).
/// A target without a recognizable movie has every component at 0.
class CompositeScorer final : public Scorer {
 public:
  CompositeScorer(const StatsStore& store, CompositeWeights weights = {});

  std::string id() const override;
  ScoreResult score(std::string_view input, std::string_view target) const override;

  /// Movies named in text: `@ title @` spans resolved against the catalog,
  /// else exact lowercased catalog titles found in free text.
  std::vector<MovieId> movies_in(std::string_view text) const;
  std::vector<std::string> tags_in(std::string_view text) const;

  double relation(std::span<const MovieId> inputs, std::span<const MovieId> targets) const;
  double tag_overlap(std::span<const std::string> tags, std::span<const MovieId> targets) const;
  double prior(std::span<const MovieId> targets) const;

  const CompositeWeights& weights() const { return weights_; }

 private:
  const StatsStore& store_;
  CompositeWeights weights_;
  std::vector<std::string> vocabulary_;
  std::vector<std::string> titles_longest_first_;
  double pmi_min_ = 0.0;
  double pmi_max_ = 0.0;
};

/// Add-k smoothed n-gram language model over `input <sep> target` token
/// streams, with order - 1 `<s>` tokens of left padding.
///   P(w | h) = (c(h, w) + k) / (c(h) + k V),  V = |vocabulary| + 1 (unknown).
class NgramModel {
 public:
  NgramModel(std::size_t order, double k);

  void add(std::string_view input, std::string_view target);
  void add_tokens(const std::vector<std::string>& tokens);

  /// Sum over target tokens of log P(token | previous order-1 tokens).
  double score_tokens(const std::vector<std::string>& context, const std::vector<std::string>& target) const;
  double log_prob(std::span<const std::string> history, const std::string& word) const;
  std::vector<std::string> stream(std::string_view input) const;

  std::size_t order() const { return order_; }
  double k() const { return k_; }
  std::size_t vocabulary_size() const { return vocabulary_.size(); }

 private:
  std::string key(std::span<const std::string> history) const;

  std::size_t order_;
  double k_;
  std::map<std::string, std::uint64_t> vocabulary_;
  std::map<std::string, std::uint64_t> history_counts_;
  std::map<std::string, std::uint64_t> ngram_counts_;
};

inline constexpr std::string_view kNgramSeparator = "<sep>";
inline constexpr std::string_view kNgramPad = "<s>";

class NgramScorer final : public Scorer {
 public:
  explicit NgramScorer(NgramModel model) : model_(std::move(model)) {}
  std::string id() const override;
  /// Empty target scores 0.
  ScoreResult score(std::string_view input, std::string_view target) const override;
  const NgramModel& model() const { return model_; }

 private:
  NgramModel model_;
};

/// Trains on every example line of the given jsonl files (labels kept).
NgramModel train_ngram(const std::vector<std::filesystem::path>& files, std::size_t order, double k);

struct RemoteEndpoint {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string base_path;  // prefix before /v1/...
  int timeout_ms = 10000;
  std::size_t max_in_flight = 8;
  std::size_t batch_size = 32;
};

/// Parses "http://host:port/prefix".
RemoteEndpoint parse_endpoint(std::string_view url);

/// Client of the score service: POST /v1/score {"input","target"} ->
/// {"log_likelihood"}; POST /v1/score_batch {"pairs":[...]} ->
/// {"log_likelihoods":[...]}. Text is sent lowercased.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteEndpoint endpoint);
  std::string id() const override;
  ScoreResult score(std::string_view input, std::string_view target) const override;
  /// Chunks into score_batch requests with at most max_in_flight concurrent
  /// requests; a failed chunk marks its pairs as errors.
  std::vector<BatchScore> score_batch(std::span<const ScorePair> pairs,
                                      std::size_t max_threads = 0) const override;

 private:
  RemoteEndpoint endpoint_;
};

/// null and the string "-inf" decode to -inf; anything else non-numeric,
/// NaN or positive values throw ScoringError.
double decode_log_likelihood(const Json& v);
Json encode_log_likelihood(double v);

enum class Backend { composite, ngram, remote };

struct ScorerConfig {
  Backend backend = Backend::composite;
  CompositeWeights weights;
  std::size_t order = 3;
  double k = 0.1;
  std::vector<std::filesystem::path> ngram_training;
  std::string endpoint = "http://127.0.0.1:8080";
  int timeout_ms = 10000;
  std::size_t max_in_flight = 8;

  /// Throws crs::Error on negative weights, order < 1, k <= 0, timeout <= 0.
  void validate() const;
  static ScorerConfig from_json(const Json& j);
};

std::optional<Backend> parse_backend(std::string_view name);
std::string_view backend_name(Backend b);

/// The store must outlive a composite scorer.
std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config, const StatsStore* store);

}  // namespace crs
