// Copyright 2026 The oais Authors
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

#include "oais/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oais/errors.hpp"

namespace oais {

namespace {

void check_field(const std::string& s) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos) {
    throw ContractViolation("csv fields must not contain commas or newlines: '" + s + "'");
  }
}

std::string double_to_string(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string cell_to_string(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          check_field(v);
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return double_to_string(v);
        } else {
          return std::to_string(v);
        }
      },
      cell);
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    check_field(table.columns[i]);
    out << table.columns[i];
    if (i + 1 < table.columns.size()) out << ',';
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw ContractViolation("csv row width does not match the header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << cell_to_string(row[i]);
      if (i + 1 < row.size()) out << ',';
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

int RawCsv::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

RawCsv read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  RawCsv out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.empty()) continue;
    if (line.back() == ',') fields.emplace_back();
    if (header) {
      out.columns = std::move(fields);
      header = false;
    } else {
      out.rows.push_back(std::move(fields));
    }
  }
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("cannot parse '" + s + "' as a number");
  }
  return v;
}

}  // namespace oais
