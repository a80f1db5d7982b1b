// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crs/corpus.hpp"
#include "crs/ingest.hpp"

namespace crs {

struct MfHyperparameters {
  std::size_t dim = 32;
  double learning_rate = 0.05;
  double regularization = 0.01;
  std::size_t epochs = 30;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 7;
  double init_scale = 0.1;
};

/// A liked (user, movie) pair; implicit positive feedback.
struct Interaction {
  UserId user = 0;
  MovieId movie = 0;
};

std::vector<Interaction> interactions_from_windows(std::span<const corpus::UserWindow> windows);

/// Row indices into the factor matrices plus a 0/1 label.
struct MfSample {
  std::size_t user = 0;
  std::size_t item = 0;
  double label = 0.0;
};

/// User and item factor matrices, row-major, `dim` columns.
class MfModel {
 public:
  MfModel() = default;
  /// Factors drawn uniformly from [-init_scale, init_scale] under the seed.
  MfModel(const MfHyperparameters& hp, std::vector<UserId> users, std::vector<MovieId> items);
  /// Adopts trained factors (store reload).
  MfModel(const MfHyperparameters& hp, std::vector<UserId> users, std::vector<double> user_factors,
          std::vector<MovieId> items, std::vector<double> item_factors);

  std::size_t dim() const { return hp_.dim; }
  const MfHyperparameters& hyperparameters() const { return hp_; }

  std::optional<std::size_t> user_row(UserId u) const;
  std::optional<std::size_t> item_row(MovieId m) const;
  bool has_item(MovieId m) const { return item_row(m).has_value(); }

  std::span<double> user(std::size_t row);
  std::span<const double> user(std::size_t row) const;
  std::span<double> item(std::size_t row);
  std::span<const double> item(std::size_t row) const;

  std::vector<double>& user_factors() { return user_factors_; }
  const std::vector<double>& user_factors() const { return user_factors_; }
  std::vector<double>& item_factors() { return item_factors_; }
  const std::vector<double>& item_factors() const { return item_factors_; }
  const std::vector<UserId>& users() const { return users_; }
  const std::vector<MovieId>& items() const { return items_; }

  double predict(std::size_t user_row, std::size_t item_row) const;
  /// Cosine similarity of item factors; throws crs::Error for unknown ids.
  double similarity(MovieId a, MovieId b) const;
  /// Items by descending cosine similarity to `query`, excluding it.
  std::vector<std::pair<MovieId, double>> most_similar(MovieId query, std::size_t k) const;

  /// Mean per-sample loss after each epoch.
  std::vector<double> loss_history;

 private:
  MfHyperparameters hp_;
  std::vector<UserId> users_;
  std::vector<MovieId> items_;
  std::unordered_map<UserId, std::size_t> user_index_;
  std::unordered_map<MovieId, std::size_t> item_index_;
  std::vector<double> user_factors_;
  std::vector<double> item_factors_;
};

/// Positives plus `negatives_per_positive` sampled unliked items per
/// positive, drawn once under the seed.
std::vector<MfSample> make_training_samples(const MfModel& model, std::span<const Interaction> liked,
                                            const MfHyperparameters& hp);

/// sum over samples of 1/2 (y - p.q)^2 + reg/2 (|p|^2 + |q|^2)
double mf_loss(const MfModel& model, std::span<const MfSample> samples, double reg);

/// Gradient of mf_loss laid out as [user factors..., item factors...].
std::vector<double> mf_gradient(const MfModel& model, std::span<const MfSample> samples, double reg);

/// SGD over a fixed, seed-shuffled sample set; throws TrainingError when
/// the loss stops being finite.
MfModel train_mf(std::span<const Interaction> liked, const MfHyperparameters& hp);
void train_mf_epochs(MfModel& model, std::span<const MfSample> samples, const MfHyperparameters& hp);

/// 1 if candidate1 is at least as similar to `query` as candidate2, else 2.
int mf_pair_decision(MovieId query, MovieId candidate1, MovieId candidate2, const MfModel& model);

}  // namespace crs
