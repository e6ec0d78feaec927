#pragma once

#include <string>
#include <vector>

namespace dvrp {

// Shortest decimal string that round-trips to the same double. Used by every
// CSV/JSON writer so repeated runs produce byte-identical files.
std::string format_double(double value);

std::string format_int(long long value);

// Minimal CSV splitter for the unquoted numeric tables this project reads.
std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws std::runtime_error when missing.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace dvrp
