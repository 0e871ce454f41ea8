#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace raddiff {

/// Shortest round-trip decimal form of v ('.' decimal separator, locale independent).
std::string format_number(double v);

/// RFC 4180 style table with LF line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& fields);

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace raddiff
