// CSV emission with a pinned dialect: comma separator, header row, '.'
// decimal point, LF line endings. Doubles use shortest round-trip form so
// equal values always serialize to equal bytes.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace edgesim {

std::string format_double(double v);

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& field(const std::string& v);
  CsvWriter& field(double v);
  CsvWriter& field(std::int64_t v);
  CsvWriter& field(std::uint64_t v);
  CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
  void end_row();

private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

// Minimal reader: splits on commas, no quoting (our files never need it).
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               bool expect_header = true,
                                               std::vector<std::string>* header = nullptr);

} // namespace edgesim
