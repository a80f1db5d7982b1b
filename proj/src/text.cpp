// SPDX-License-Identifier: Apache-2.0
#include "crs/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "crs/error.hpp"

namespace crs::text {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

constexpr std::array<std::string_view, 10> kAbbreviations = {
    "mr.", "mrs.", "ms.", "dr.", "st.", "vs.", "etc.", "e.g.", "i.e.", "jr."};

bool ends_with_abbreviation(std::string_view s, std::size_t period) {
  // Token that ends at `period` (inclusive).
  std::size_t start = period;
  while (start > 0 && !is_space(s[start - 1])) --start;
  std::string token = to_lower(s.substr(start, period - start + 1));
  while (!token.empty() && !is_alnum(token.front())) token.erase(token.begin());
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), token) != kAbbreviations.end() ||
         token == "sr.";
}

std::size_t count_signs(std::string_view s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '@'));
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string normalize_space(std::string_view s) { return join(split_whitespace(s), " "); }

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t count_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : s) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (prefix.size() > s.size()) return false;
  return to_lower(s.substr(0, prefix.size())) == to_lower(prefix);
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_terminal(s[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < s.size() && is_terminal(s[end])) ++end;
    while (end < s.size() && is_closer(s[end])) ++end;
    const bool at_break = end == s.size() || is_space(s[end]);
    const bool abbreviation = end == i + 1 && s[i] == '.' && ends_with_abbreviation(s, i);
    if (at_break && !abbreviation) {
      auto sentence = trim(s.substr(start, end - start));
      if (!sentence.empty()) out.emplace_back(sentence);
      start = end;
    }
    i = end;
  }
  auto tail = trim(s.substr(std::min(start, s.size())));
  if (!tail.empty()) out.emplace_back(tail);
  return out;
}

std::vector<TitleSpan> find_title_spans(std::string_view s) {
  std::vector<TitleSpan> spans;
  std::size_t open = std::string_view::npos;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '@') continue;
    if (open == std::string_view::npos) {
      open = i;
    } else {
      spans.push_back({open, i, std::string(trim(s.substr(open + 1, i - open - 1)))});
      open = std::string_view::npos;
    }
  }
  if (open != std::string_view::npos) {
    throw DelimiterError("unbalanced '@' at offset " + std::to_string(open), open);
  }
  return spans;
}

std::vector<std::string> split_separated_titles(std::string_view s) {
  std::vector<std::string> out;
  std::size_t first = s.find('@');
  if (first == std::string_view::npos) return out;
  std::size_t prev = first;
  for (std::size_t i = first + 1; i < s.size(); ++i) {
    if (s[i] != '@') continue;
    auto title = trim(s.substr(prev + 1, i - prev - 1));
    if (!title.empty()) out.emplace_back(title);
    prev = i;
  }
  return out;
}

std::string delimit_title(std::string_view title) {
  std::string out = "@ ";
  out += trim(title);
  out += " @";
  return out;
}

std::string keep_last_tokens(std::string_view s, std::size_t max_tokens) {
  auto tokens = split_whitespace(s);
  if (tokens.size() <= max_tokens) return join(tokens, " ");
  std::vector<std::string> kept(tokens.end() - static_cast<std::ptrdiff_t>(max_tokens), tokens.end());
  std::string out = join(kept, " ");
  if (count_signs(out) % 2 == 1) {
    // The first sign closes a span whose opening was cut away.
    std::size_t pos = out.find('@');
    out = std::string(trim(std::string_view(out).substr(pos + 1)));
  }
  return out;
}

std::string keep_first_tokens(std::string_view s, std::size_t max_tokens) {
  auto tokens = split_whitespace(s);
  if (tokens.size() <= max_tokens) return join(tokens, " ");
  tokens.resize(max_tokens);
  std::string out = join(tokens, " ");
  if (count_signs(out) % 2 == 1) {
    std::size_t pos = out.rfind('@');
    out = std::string(trim(std::string_view(out).substr(0, pos)));
  }
  return out;
}

std::vector<std::string> match_phrases(std::string_view s,
                                       const std::vector<std::string>& phrases_longest_first,
                                       bool skip_titles) {
  std::vector<bool> covered(s.size(), false);
  if (skip_titles) {
    try {
      for (const auto& span : find_title_spans(s)) {
        std::fill(covered.begin() + static_cast<std::ptrdiff_t>(span.open),
                  covered.begin() + static_cast<std::ptrdiff_t>(span.close) + 1, true);
      }
    } catch (const DelimiterError&) {
      // Unpaired signs: nothing is treated as a title.
    }
  }
  std::vector<std::pair<std::size_t, const std::string*>> hits;
  for (const auto& phrase : phrases_longest_first) {
    if (phrase.empty()) continue;
    std::size_t pos = s.find(phrase);
    while (pos != std::string_view::npos) {
      const std::size_t end = pos + phrase.size();
      const bool left_ok = pos == 0 || !is_alnum(s[pos - 1]) || !is_alnum(phrase.front());
      const bool right_ok = end == s.size() || !is_alnum(s[end]) || !is_alnum(phrase.back());
      const bool free = std::none_of(covered.begin() + static_cast<std::ptrdiff_t>(pos),
                                     covered.begin() + static_cast<std::ptrdiff_t>(end),
                                     [](bool b) { return b; });
      if (left_ok && right_ok && free) {
        std::fill(covered.begin() + static_cast<std::ptrdiff_t>(pos),
                  covered.begin() + static_cast<std::ptrdiff_t>(end), true);
        hits.emplace_back(pos, &phrase);
      }
      pos = s.find(phrase, pos + 1);
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  out.reserve(hits.size());
  for (const auto& [pos, phrase] : hits) out.push_back(*phrase);
  return out;
}

}  // namespace crs::text
