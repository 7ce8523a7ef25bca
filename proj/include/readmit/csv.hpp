#pragma once

// Minimal RFC-4180 reader/writer plus the text helpers shared by the file formats.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "readmit/error.hpp"

namespace readmit::csv {

struct Row {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Index of a header column; throws MalformedCsv when absent.
  std::size_t column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MalformedCsv, "missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<Row> parse_records(std::string_view text) {
  std::vector<Row> out;
  std::size_t i = 0, line = 1;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < text.size()) {
    Row row;
    row.line = line;
    std::string field;
    bool done = false;
    while (!done) {
      field.clear();
      if (i < text.size() && text[i] == '"') {
        ++i;
        std::size_t open_line = line;
        for (;;) {
          if (i >= text.size())
            throw Error(ErrorCode::MalformedCsv, "unterminated quoted field starting on line " + std::to_string(open_line));
          char c = text[i++];
          if (c == '"') {
            if (i < text.size() && text[i] == '"') {
              field += '"';
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field += c;
          }
        }
        if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
          throw Error(ErrorCode::MalformedCsv, "unexpected character after closing quote on line " + std::to_string(line));
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"')
            throw Error(ErrorCode::MalformedCsv, "stray quote in unquoted field on line " + std::to_string(line));
          field += text[i++];
        }
      }
      row.fields.push_back(field);
      if (i >= text.size()) {
        done = true;
      } else if (text[i] == ',') {
        ++i;
      } else {
        if (text[i] == '\r') ++i;
        if (i < text.size() && text[i] == '\n') ++i;
        ++line;
        done = true;
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Parses a file with a header row. An empty document yields an empty table
/// with an empty header; callers decide whether that is acceptable.
inline Table parse(std::string_view text) {
  Table table;
  auto records = parse_records(text);
  if (records.empty()) return table;
  table.header = std::move(records.front().fields);
  for (auto& h : table.header) {
    auto first = h.find_first_not_of(" \t");
    auto last = h.find_last_not_of(" \t");
    h = first == std::string::npos ? std::string{} : h.substr(first, last - first + 1);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    if (rec.fields.size() != table.header.size())
      throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(rec.line) + ": expected " +
                                               std::to_string(table.header.size()) + " columns, found " +
                                               std::to_string(rec.fields.size()));
    table.rows.push_back(std::move(rec));
  }
  return table;
}

inline std::string escape_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << escape_field(fields[i]);
  }
  os << '\n';
}

// ---------------------------------------------------------------------------
// text helpers

inline std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Shortest text that parses back to exactly the same double.
inline std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline std::optional<double> parse_number(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value))
    throw Error(ErrorCode::MalformedCsv, "not a number: '" + t + "'");
  return value;
}

// ---------------------------------------------------------------------------
// file helpers

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

inline Table read_table(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedCsv) throw Error(ErrorCode::MalformedCsv, path.string() + ": " + e.what());
    throw;
  }
}

}  // namespace readmit::csv
