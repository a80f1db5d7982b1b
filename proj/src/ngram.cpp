// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>

#include "crs/error.hpp"
#include "crs/scoring.hpp"
#include "crs/text.hpp"

namespace crs {

NgramModel::NgramModel(std::size_t order, double k) : order_(order), k_(k) {
  if (order_ < 1) throw Error("n-gram order must be >= 1");
  if (!(k_ > 0)) throw Error("n-gram smoothing constant must be > 0");
}

std::string NgramModel::key(std::span<const std::string> history) const {
  std::string out;
  for (const auto& t : history) {
    out += t;
    out += '\x1f';
  }
  return out;
}

std::vector<std::string> NgramModel::stream(std::string_view input) const {
  std::vector<std::string> out(order_ - 1, std::string(kNgramPad));
  for (auto& t : text::split_whitespace(text::to_lower(input))) out.push_back(std::move(t));
  out.emplace_back(kNgramSeparator);
  return out;
}

void NgramModel::add_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> padded(order_ - 1, std::string(kNgramPad));
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  for (std::size_t i = order_ - 1; i < padded.size(); ++i) {
    std::span<const std::string> history(padded.data() + i - (order_ - 1), order_ - 1);
    const std::string h = key(history);
    ++vocabulary_[padded[i]];
    ++history_counts_[h];
    ++ngram_counts_[h + '\x1e' + padded[i]];
  }
}

void NgramModel::add(std::string_view input, std::string_view target) {
  std::vector<std::string> tokens = text::split_whitespace(text::to_lower(input));
  tokens.emplace_back(kNgramSeparator);
  for (auto& t : text::split_whitespace(text::to_lower(target))) tokens.push_back(std::move(t));
  add_tokens(tokens);
}

double NgramModel::log_prob(std::span<const std::string> history, const std::string& word) const {
  const std::string h = key(history);
  auto hc = history_counts_.find(h);
  auto nc = ngram_counts_.find(h + '\x1e' + word);
  const double c_h = hc == history_counts_.end() ? 0.0 : static_cast<double>(hc->second);
  const double c_hw = nc == ngram_counts_.end() ? 0.0 : static_cast<double>(nc->second);
  const double v = static_cast<double>(vocabulary_.size() + 1);
  return std::log((c_hw + k_) / (c_h + k_ * v));
}

double NgramModel::score_tokens(const std::vector<std::string>& context,
                                const std::vector<std::string>& target) const {
  std::vector<std::string> all(order_ - 1, std::string(kNgramPad));
  all.insert(all.end(), context.begin(), context.end());
  const std::size_t start = all.size();
  all.insert(all.end(), target.begin(), target.end());
  double total = 0.0;
  for (std::size_t i = start; i < all.size(); ++i) {
    std::span<const std::string> history(all.data() + i - (order_ - 1), order_ - 1);
    total += log_prob(history, all[i]);
  }
  return total;
}

std::string NgramScorer::id() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "ngram(%zu,%g)", model_.order(), model_.k());
  return buf;
}

ScoreResult NgramScorer::score(std::string_view input, std::string_view target) const {
  std::vector<std::string> context = text::split_whitespace(text::to_lower(input));
  context.emplace_back(kNgramSeparator);
  const auto t = text::split_whitespace(text::to_lower(target));
  return {model_.score_tokens(context, t), id()};
}

NgramModel train_ngram(const std::vector<std::filesystem::path>& files, std::size_t order, double k) {
  NgramModel model(order, k);
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open n-gram training file " + path.string());
    jsonl::for_each(in, [&](std::size_t, const Json& j) {
      model.add(j.at("input").get<std::string>(), j.at("target").get<std::string>());
    });
  }
  return model;
}

}  // namespace crs
