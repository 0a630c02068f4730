#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sdnet::util {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index for `name`, or -1.
  int column(const std::string& name) const;
};

/// Reads a comma-separated file with a mandatory header row.
/// Handles quoted fields, escaped quotes ("") and CRLF line ends.
CsvTable read_csv(const std::filesystem::path& path);

/// Parses one CSV record. Exposed for tests.
std::vector<std::string> split_csv_line(const std::string& line);

std::string csv_escape(const std::string& field);

void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace sdnet::util
