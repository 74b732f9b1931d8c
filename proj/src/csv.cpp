#include "texmesh/csv.hpp"

#include <charconv>

#include <fmt/format.h>

#include "texmesh/errors.hpp"

namespace texmesh {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      row.push_back(field);
      rows.push_back(std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(field);
        field.clear();
        field_started = true;
        break;
      case '\r': break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw ParseError(line, "unterminated quoted CSV field");
  end_row();
  return rows;
}

CsvTable::CsvTable(std::string_view text) {
  auto all = parse_csv(text);
  if (all.empty()) throw ParseError(1, "CSV has no header row");
  for (std::size_t i = 0; i < all.front().size(); ++i) {
    auto name = all.front()[i];
    if (i == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0) name.erase(0, 3);
    if (!columns_.emplace(name, i).second) throw ParseError(1, "duplicate CSV column '" + name + "'");
    header_.push_back(name);
  }
  for (std::size_t r = 1; r < all.size(); ++r) {
    if (all[r].size() != all.front().size())
      throw ParseError(r + 1, fmt::format("expected {} fields, got {}", all.front().size(), all[r].size()));
    rows_.push_back(std::move(all[r]));
  }
}

const std::string& CsvTable::at(std::size_t row, const std::string& column) const {
  const auto it = columns_.find(column);
  if (it == columns_.end()) throw ValidationError("CSV lacks column '" + column + "'");
  return rows_.at(row)[it->second];
}

double CsvTable::number(std::size_t row, const std::string& column) const {
  const auto& s = at(row, column);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw ParseError(row + 2, fmt::format("column '{}': '{}' is not a number", column, s));
  return v;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace texmesh
