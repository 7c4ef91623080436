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

#ifndef OAIS_CSV_HPP
#define OAIS_CSV_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace oais {

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Renders a cell; doubles use the shortest representation that reparses to
/// the same value, so written files round-trip exactly.
std::string cell_to_string(const Cell& cell);

/// UTF-8, header row, comma separated, one row per record, deterministic.
void write_csv(const Table& table, const std::string& path);

/// Reads back a CSV written by write_csv. Cells come back as strings;
/// use parse_double on numeric columns.
struct RawCsv {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};

RawCsv read_csv(const std::string& path);

double parse_double(const std::string& s);

}  // namespace oais

#endif  // OAIS_CSV_HPP
