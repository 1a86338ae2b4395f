#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cryptodiv {

/// Raised for unreadable or malformed input files. The message always names
/// the offending path.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers; // 1-based source line of each row

  /// Index of a header column, or throws InputError naming `source`.
  [[nodiscard]] std::size_t column(std::string_view name, std::string_view source) const;
};

/// Reads a comma-separated file with a header row. Double-quoted fields are
/// supported; blank lines are skipped. Every row must have header.size() cells.
CsvTable read_csv(const std::filesystem::path& path);

/// Parses a real-valued cell. Empty cells yield NaN (missing).
double parse_cell(std::string_view cell, const std::filesystem::path& path,
                  std::size_t line);

/// Shortest round-trip representation; NaN renders as an empty cell.
std::string format_number(double value);

/// Fixed-point representation with `digits` decimals.
std::string format_fixed(double value, int digits);

/// Quotes a cell if it contains separators or quotes.
std::string csv_escape(std::string_view cell);

std::string csv_line(const std::vector<std::string>& cells);

} // namespace cryptodiv
