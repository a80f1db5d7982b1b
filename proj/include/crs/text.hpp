// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace crs::text {

/// ASCII lowercasing; bytes outside ASCII (UTF-8 continuation etc.) pass
/// through untouched.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

/// Collapses runs of whitespace to one space and trims both ends.
std::string normalize_space(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
std::size_t count_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Sentence boundaries: a run of terminal marks (`.`, `!`, `?`), optionally
/// followed by closing quotes/brackets, then whitespace or end of text.
/// A period ending a short list of common abbreviations (mr., mrs., dr.,
/// st., vs., etc., e.g., i.e., jr., sr.) or a single capital initial does
/// not end a sentence. Text without terminal marks is one sentence.
std::vector<std::string> split_sentences(std::string_view s);

/// One `@ title @` span: byte offsets of the opening and closing signs and
/// the trimmed title between them.
struct TitleSpan {
  std::size_t open = 0;
  std::size_t close = 0;
  std::string title;
};

/// Pairs `@` signs left to right. Throws DelimiterError on an odd count.
std::vector<TitleSpan> find_title_spans(std::string_view s);

/// Titles of a sequence-task input, `@ a @ b @ c @`, where `@` separates
/// consecutive titles rather than pairing around each one.
std::vector<std::string> split_separated_titles(std::string_view s);

std::string delimit_title(std::string_view title);

/// Keeps at most `max_tokens` whitespace tokens, dropping from the front.
/// If the cut lands inside an `@ ... @` span, the partial span is dropped
/// as well so the remaining signs stay paired.
std::string keep_last_tokens(std::string_view s, std::size_t max_tokens);

/// Keeps at most `max_tokens` whitespace tokens, dropping from the back,
/// with the same span repair as keep_last_tokens.
std::string keep_first_tokens(std::string_view s, std::size_t max_tokens);

/// Non-overlapping, longest-first phrase matches of `phrases` inside `s`
/// on alphanumeric word boundaries. Regions inside `@ ... @` are skipped
/// when `skip_titles` is set. Returns the matched phrases in text order.
std::vector<std::string> match_phrases(std::string_view s,
                                       const std::vector<std::string>& phrases_longest_first,
                                       bool skip_titles = true);

}  // namespace crs::text
