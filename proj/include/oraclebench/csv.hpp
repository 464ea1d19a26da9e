// Copyright 2026 The OracleBench Authors.
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

#include <cstdint>
#include <string>
#include <vector>

#include "oraclebench/common.hpp"

namespace oraclebench {

/// Comma-separated, LF line endings, mandatory header, no quoting (cell
/// values must not contain commas). Doubles use shortest round-trip decimals
/// so byte-identical replay checks work.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    require(!header.empty(), "CsvWriter: empty header");
    append_row(header);
  }

  struct Cell {
    std::string text;
    Cell(const char* s) : text(s) {}                          // NOLINT
    Cell(const std::string& s) : text(s) {}                   // NOLINT
    Cell(double v) : text(format_double(v)) {}                // NOLINT
    Cell(unsigned long v) : text(std::to_string(v)) {}        // NOLINT
    Cell(unsigned long long v) : text(std::to_string(v)) {}   // NOLINT
    Cell(unsigned v) : text(std::to_string(v)) {}             // NOLINT
    Cell(int v) : text(std::to_string(v)) {}                  // NOLINT
    Cell(bool v) : text(v ? "true" : "false") {}              // NOLINT
  };

  void row(const std::vector<Cell>& cells) {
    require(cells.size() == width_, "CsvWriter: wrong column count");
    std::vector<std::string> texts;
    texts.reserve(cells.size());
    for (const auto& c : cells) texts.push_back(c.text);
    append_row(texts);
  }

  const std::string& str() const { return out_; }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      require(cells[i].find(',') == std::string::npos &&
                  cells[i].find('\n') == std::string::npos,
              "CsvWriter: cell contains a delimiter");
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }

  std::size_t width_;
  std::string out_;
};

}  // namespace oraclebench
