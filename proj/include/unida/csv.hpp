#pragma once

#include <string>
#include <vector>

namespace unida {

// Shortest round-trip decimal form (std::to_chars): reading the string
// back with parse_double recovers the exact bits. Never more than 17
// significant digits, locale-independent.
std::string format_double(double v);
double parse_double(const std::string& s);
long long parse_int(const std::string& s);

std::vector<std::string> split_csv_line(const std::string& line);
std::string join_csv(const std::vector<std::string>& fields);

// Minimal CSV table: optional leading '#'-comment lines, one header row,
// then data rows. All sweep outputs go through this.
struct CsvTable {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
  // Throws with a column diagnostic when `name` is missing.
  int require_column(const std::string& name) const;
  double cell_double(std::size_t row, int col) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const CsvTable& table, const std::string& path);

// Append-only writer used by sweep runners; rows are flushed in the order
// they are appended.
class CsvWriter {
 public:
  CsvWriter(std::string path, std::string version_comment,
            std::vector<std::string> header);
  void append(const std::vector<std::string>& row);
  void flush();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  CsvTable table_;
};

}  // namespace unida
