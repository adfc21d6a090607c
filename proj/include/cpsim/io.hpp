// Copyright 2026 The cpsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cpsim/common.hpp"

namespace cpsim::io {

using json = nlohmann::json;

/// A table cell. Strings must not contain separators and must not parse as
/// numbers, so that CSV files re-read to the same cell types.
using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    require(row.size() == columns.size(), "Table: row width differs from column count");
    rows.push_back(std::move(row));
  }
};

/// Shortest decimal string that parses back to exactly x.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\n\r\"#") != std::string::npos)
    throw ContractViolation("format_cell: string cell contains a reserved character");
  return s;
}

inline Cell parse_cell(const std::string& tok) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  // to_chars writes -0.0 as "-0", which must not come back as the integer 0.
  if (tok == "-0") return -0.0;
  std::int64_t i = 0;
  auto ri = std::from_chars(b, e, i);
  if (ri.ec == std::errc{} && ri.ptr == e && !tok.empty()) return i;
  double d = 0.0;
  auto rd = std::from_chars(b, e, d);
  if (rd.ec == std::errc{} && rd.ptr == e && !tok.empty()) return d;
  return tok;
}

inline json cell_to_json(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(nullptr);
  return std::get<std::string>(c);
}

inline Cell json_to_cell(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<std::string>();
}

/// CSV: one '#'-prefixed compact JSON metadata line, a header row, data rows.
inline std::string to_csv(const Table& t, const json& metadata) {
  std::ostringstream os;
  os << '#' << metadata.dump() << '\n';
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_cell(row[c]);
    os << '\n';
  }
  return os.str();
}

/// JSON: {"metadata": ..., "columns": [...], "rows": [[...], ...]}, two-space indent.
inline std::string to_json(const Table& t, const json& metadata) {
  json doc;
  doc["metadata"] = metadata;
  doc["columns"] = t.columns;
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& c : row) r.push_back(cell_to_json(c));
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

struct Document {
  json metadata;
  Table table;
};

inline Document read_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Document doc;
  if (!std::getline(is, line) || line.empty() || line[0] != '#')
    throw std::runtime_error("read_csv: missing '#' metadata line");
  doc.metadata = json::parse(line.substr(1));
  if (!std::getline(is, line)) throw std::runtime_error("read_csv: missing header row");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto pos = s.find(',', start);
      out.push_back(s.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  };
  doc.table.columns = split(line);
  while (std::getline(is, line)) {
    std::vector<Cell> row;
    for (const auto& tok : split(line)) row.push_back(parse_cell(tok));
    doc.table.add_row(std::move(row));
  }
  return doc;
}

inline Document read_json(const std::string& text) {
  const json j = json::parse(text);
  Document doc;
  doc.metadata = j.at("metadata");
  doc.table.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) row.push_back(json_to_cell(c));
    doc.table.add_row(std::move(row));
  }
  return doc;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace cpsim::io
