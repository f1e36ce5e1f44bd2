#include "bnmf/csv.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace bnmf {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::ostream& out) : out_(&out) {}

CsvWriter::CsvWriter(const std::filesystem::path& path)
    : file_(path, std::ios::trunc), out_(&file_) {
  if (!file_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void CsvWriter::comment(std::string_view text) {
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    *out_ << "# " << text.substr(start, end - start) << '\n';
    start = end + 1;
  }
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  n_columns_ = columns.size();
  for (std::size_t i = 0; i < columns.size(); ++i)
    *out_ << (i ? "," : "") << csv_escape(columns[i]);
  *out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (n_columns_ != 0 && cells.size() != n_columns_)
    throw std::invalid_argument(
        fmt::format("row has {} cells, header has {}", cells.size(), n_columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) *out_ << ',';
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) *out_ << format_double(v);
          else if constexpr (std::is_same_v<T, std::int64_t>) *out_ << v;
          else *out_ << csv_escape(v);
        },
        cells[i]);
  }
  *out_ << '\n';
}

void CsvWriter::flush() { out_->flush(); }

long CsvTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<long>(i);
  return -1;
}

namespace {

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      table.columns = split_record(line);
      have_header = true;
    } else {
      table.rows.push_back(split_record(line));
    }
  }
  return table;
}

}  // namespace bnmf
