#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bnmf {

using CsvCell = std::variant<double, std::int64_t, std::string>;

/// Shortest round-trip text for doubles; non-finite values become inf, -inf, nan.
std::string format_double(double value);
/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// RFC-4180 style writer with optional leading "# " comment lines.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out);
  explicit CsvWriter(const std::filesystem::path& path);

  void comment(std::string_view text);  // split on newlines
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<CsvCell>& cells);
  void flush();

 private:
  std::ofstream file_;
  std::ostream* out_;
  std::size_t n_columns_ = 0;
};

/// Reads a CSV written by CsvWriter: skips comment lines, returns the header
/// and the raw cell strings. Used by resume logic and tests.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  long column_index(std::string_view name) const;  // -1 if absent
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bnmf
