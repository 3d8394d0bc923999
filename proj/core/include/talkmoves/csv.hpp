#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace talkmoves {

// Minimal RFC 4180 table: a header row plus string cells. Quoted fields may
// contain commas, quotes ("" escape) and newlines.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header);

  static CsvTable parse(std::istream& in, const std::string& source_name);
  static CsvTable read(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws JoinError naming the missing column.
  std::size_t require_column(std::string_view name) const;

  // Throws ValidationError on a width mismatch.
  void add_row(std::vector<std::string> row);

  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string csv_escape(std::string_view field);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

// Parses a full cell as a double; empty or malformed cells yield nullopt.
std::optional<double> parse_double(std::string_view cell);

}  // namespace talkmoves
