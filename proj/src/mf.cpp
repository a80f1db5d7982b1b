// SPDX-License-Identifier: Apache-2.0
#include "crs/mf.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "crs/error.hpp"
#include "crs/kernels.hpp"
#include "crs/rng.hpp"

namespace crs {

std::vector<Interaction> interactions_from_windows(std::span<const corpus::UserWindow> windows) {
  std::set<std::pair<UserId, MovieId>> seen;
  std::vector<Interaction> out;
  for (const auto& w : windows) {
    for (MovieId m : w.movies) {
      if (seen.emplace(w.user, m).second) out.push_back({w.user, m});
    }
  }
  return out;
}

MfModel::MfModel(const MfHyperparameters& hp, std::vector<UserId> users, std::vector<MovieId> items)
    : hp_(hp), users_(std::move(users)), items_(std::move(items)) {
  if (hp_.dim == 0) throw TrainingError("factor dimension must be at least 1");
  for (std::size_t i = 0; i < users_.size(); ++i) user_index_[users_[i]] = i;
  for (std::size_t i = 0; i < items_.size(); ++i) item_index_[items_[i]] = i;
  Rng rng(derive_seed(hp_.seed, "mf-init"));
  user_factors_.resize(users_.size() * hp_.dim);
  item_factors_.resize(items_.size() * hp_.dim);
  for (double& x : user_factors_) x = rng.uniform(-hp_.init_scale, hp_.init_scale);
  for (double& x : item_factors_) x = rng.uniform(-hp_.init_scale, hp_.init_scale);
}

MfModel::MfModel(const MfHyperparameters& hp, std::vector<UserId> users,
                 std::vector<double> user_factors, std::vector<MovieId> items,
                 std::vector<double> item_factors)
    : hp_(hp),
      users_(std::move(users)),
      items_(std::move(items)),
      user_factors_(std::move(user_factors)),
      item_factors_(std::move(item_factors)) {
  if (hp_.dim == 0) throw StoreError("factor dimension must be at least 1");
  if (user_factors_.size() != users_.size() * hp_.dim || item_factors_.size() != items_.size() * hp_.dim) {
    throw StoreError("factor matrix shape does not match its id list");
  }
  for (std::size_t i = 0; i < users_.size(); ++i) user_index_[users_[i]] = i;
  for (std::size_t i = 0; i < items_.size(); ++i) item_index_[items_[i]] = i;
}

std::optional<std::size_t> MfModel::user_row(UserId u) const {
  auto it = user_index_.find(u);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> MfModel::item_row(MovieId m) const {
  auto it = item_index_.find(m);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::span<double> MfModel::user(std::size_t row) {
  return {user_factors_.data() + row * hp_.dim, hp_.dim};
}
std::span<const double> MfModel::user(std::size_t row) const {
  return {user_factors_.data() + row * hp_.dim, hp_.dim};
}
std::span<double> MfModel::item(std::size_t row) {
  return {item_factors_.data() + row * hp_.dim, hp_.dim};
}
std::span<const double> MfModel::item(std::size_t row) const {
  return {item_factors_.data() + row * hp_.dim, hp_.dim};
}

double MfModel::predict(std::size_t user_row, std::size_t item_row) const {
  return kernels::dot(user(user_row), item(item_row));
}

double MfModel::similarity(MovieId a, MovieId b) const {
  auto ra = item_row(a);
  auto rb = item_row(b);
  if (!ra || !rb) {
    throw Error("movie " + std::to_string(ra ? b : a) + " is not in the factor model");
  }
  return kernels::cosine(item(*ra), item(*rb));
}

std::vector<std::pair<MovieId, double>> MfModel::most_similar(MovieId query, std::size_t k) const {
  auto rq = item_row(query);
  if (!rq) throw Error("movie " + std::to_string(query) + " is not in the factor model");
  std::vector<double> dots(items_.size());
  kernels::row_dots(item_factors_, hp_.dim, item(*rq), dots);
  const double nq = kernels::norm(item(*rq));
  std::vector<std::pair<MovieId, double>> out;
  out.reserve(items_.size());
  for (std::size_t r = 0; r < items_.size(); ++r) {
    if (r == *rq) continue;
    const double nr = kernels::norm(item(r));
    out.emplace_back(items_[r], nq == 0.0 || nr == 0.0 ? 0.0 : dots[r] / (nq * nr));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<MfSample> make_training_samples(const MfModel& model, std::span<const Interaction> liked,
                                            const MfHyperparameters& hp) {
  std::unordered_map<std::size_t, std::unordered_set<std::size_t>> positives;
  std::vector<MfSample> samples;
  for (const auto& x : liked) {
    auto u = model.user_row(x.user);
    auto i = model.item_row(x.movie);
    if (!u || !i) continue;
    if (positives[*u].insert(*i).second) samples.push_back({*u, *i, 1.0});
  }
  const std::size_t n_items = model.items().size();
  Rng rng(derive_seed(hp.seed, "mf-negatives"));
  const std::size_t n_pos = samples.size();
  for (std::size_t s = 0; s < n_pos; ++s) {
    const std::size_t u = samples[s].user;
    const auto& liked_by_u = positives[u];
    if (liked_by_u.size() >= n_items) continue;
    for (std::size_t k = 0; k < hp.negatives_per_positive; ++k) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        const auto j = static_cast<std::size_t>(rng.below(n_items));
        if (!liked_by_u.count(j)) {
          samples.push_back({u, j, 0.0});
          break;
        }
      }
    }
  }
  return samples;
}

double mf_loss(const MfModel& model, std::span<const MfSample> samples, double reg) {
  double total = 0.0;
  for (const auto& s : samples) {
    const auto p = model.user(s.user);
    const auto q = model.item(s.item);
    const double e = s.label - kernels::dot(p, q);
    total += 0.5 * e * e + 0.5 * reg * (kernels::dot(p, p) + kernels::dot(q, q));
  }
  return total;
}

std::vector<double> mf_gradient(const MfModel& model, std::span<const MfSample> samples, double reg) {
  const std::size_t d = model.dim();
  const std::size_t item_offset = model.user_factors().size();
  std::vector<double> grad(item_offset + model.item_factors().size(), 0.0);
  for (const auto& s : samples) {
    const auto p = model.user(s.user);
    const auto q = model.item(s.item);
    const double e = s.label - kernels::dot(p, q);
    double* gp = grad.data() + s.user * d;
    double* gq = grad.data() + item_offset + s.item * d;
    for (std::size_t f = 0; f < d; ++f) {
      gp[f] += -e * q[f] + reg * p[f];
      gq[f] += -e * p[f] + reg * q[f];
    }
  }
  return grad;
}

void train_mf_epochs(MfModel& model, std::span<const MfSample> samples, const MfHyperparameters& hp) {
  if (samples.empty()) throw TrainingError("no training samples");
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(hp.seed, "mf-order"));
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const auto& s = samples[idx];
      auto p = model.user(s.user);
      auto q = model.item(s.item);
      const double e = s.label - kernels::dot(p, q);
      kernels::sgd_pair(p, q, e, hp.learning_rate, hp.regularization);
    }
    const double loss = mf_loss(model, samples, hp.regularization) / static_cast<double>(samples.size());
    if (!std::isfinite(loss)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1) +
                          " (non-finite loss); try a smaller learning rate");
    }
    model.loss_history.push_back(loss);
  }
}

MfModel train_mf(std::span<const Interaction> liked, const MfHyperparameters& hp) {
  std::set<UserId> users;
  std::set<MovieId> items;
  for (const auto& x : liked) {
    users.insert(x.user);
    items.insert(x.movie);
  }
  MfModel model(hp, {users.begin(), users.end()}, {items.begin(), items.end()});
  const auto samples = make_training_samples(model, liked, hp);
  train_mf_epochs(model, samples, hp);
  return model;
}

int mf_pair_decision(MovieId query, MovieId candidate1, MovieId candidate2, const MfModel& model) {
  const double s1 = model.similarity(query, candidate1);
  const double s2 = model.similarity(query, candidate2);
  return s1 >= s2 ? 1 : 2;
}

}  // namespace crs
