// SPDX-License-Identifier: Apache-2.0
#include "crs/jsonl.hpp"

#include <fstream>

#include "crs/error.hpp"
#include "crs/text.hpp"

namespace crs {
namespace jsonl {

std::string dump(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

void write_line(std::ostream& out, const Json& j) { out << dump(j) << '\n'; }

void for_each(std::istream& in, const std::function<void(std::size_t, const Json&)>& fn,
              const std::function<void(std::size_t, const std::string&)>& on_error) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      std::string msg = std::string("unreadable record: ") + e.what();
      if (!on_error) throw ParseError("line " + std::to_string(line_no) + ": " + msg);
      on_error(line_no, msg);
      continue;
    }
    fn(line_no, j);
  }
}

std::vector<Json> read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Json> out;
  for_each(in, [&](std::size_t, const Json& j) { out.push_back(j); });
  return out;
}

void write_file(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) write_line(out, r);
}

std::size_t count_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) ++n;
  }
  return n;
}

}  // namespace jsonl

std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace crs
