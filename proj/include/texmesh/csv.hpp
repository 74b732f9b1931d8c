#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace texmesh {

/// Minimal RFC 4180 reader: comma separated, double-quoted fields with ""
/// escapes, CRLF or LF line ends. Blank lines are skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// CSV with a header row; rows are addressed by column name.
class CsvTable {
 public:
  explicit CsvTable(std::string_view text);

  std::size_t rows() const { return rows_.size(); }
  bool has_column(const std::string& name) const { return columns_.count(name) > 0; }
  /// Header names in file order.
  const std::vector<std::string>& columns() const { return header_; }
  const std::string& at(std::size_t row, const std::string& column) const;
  double number(std::size_t row, const std::string& column) const;

 private:
  std::map<std::string, std::size_t> columns_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(std::string_view field);

}  // namespace texmesh
