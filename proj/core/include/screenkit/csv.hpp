#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace screenkit::csv {

// A parsed comma-separated table with a mandatory header row. Fields may be
// double-quoted ("" escapes a quote). Empty fields are kept as empty strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row, for diagnostics.
  std::vector<std::size_t> line_numbers;

  // Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

Table parse(std::istream& in);
Table read_file(const std::string& path);

std::vector<std::string> split_line(std::string_view line);

// Quotes a field only when it contains a delimiter, quote, or newline.
std::string escape(std::string_view field);

std::optional<double> parse_optional_double(std::string_view field);
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Shortest round-trippable representation of a double.
std::string format_double(double v);

}  // namespace screenkit::csv
