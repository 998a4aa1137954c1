#include "edgesim/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace edgesim {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

CsvWriter& CsvWriter::field(const std::string& v) {
  if (in_row_) out_ << ',';
  out_ << v;
  ++in_row_;
  return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }
CsvWriter& CsvWriter::field(std::int64_t v) { return field(std::to_string(v)); }
CsvWriter& CsvWriter::field(std::uint64_t v) { return field(std::to_string(v)); }

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw std::logic_error("csv row width mismatch");
  out_ << '\n';
  in_row_ = 0;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               bool expect_header,
                                               std::vector<std::string>* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first && expect_header) {
      if (header) *header = cells;
      first = false;
      continue;
    }
    first = false;
    rows.push_back(std::move(cells));
  }
  return rows;
}

} // namespace edgesim
