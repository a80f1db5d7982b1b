// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace crs {

using Json = nlohmann::json;

namespace jsonl {

/// Compact, deterministic serialization; invalid UTF-8 is replaced rather
/// than thrown on.
std::string dump(const Json& j);

void write_line(std::ostream& out, const Json& j);

/// Calls `fn(line_number, json)` for each non-blank line. Lines that fail to
/// parse are passed to `on_error(line_number, message)`; if no handler is
/// given a ParseError is thrown.
void for_each(std::istream& in, const std::function<void(std::size_t, const Json&)>& fn,
              const std::function<void(std::size_t, const std::string&)>& on_error = {});

std::vector<Json> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<Json>& records);

std::size_t count_lines(const std::filesystem::path& path);

}  // namespace jsonl

/// Splits one CSV row per RFC 4180 (quoted fields, doubled quotes).
std::vector<std::string> split_csv_row(std::string_view line);

}  // namespace crs
