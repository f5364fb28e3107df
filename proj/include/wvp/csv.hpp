#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wvp::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated table with a header row. Double-quoted fields may
/// contain commas and "" escapes. Blank lines are skipped.
Table read(std::istream& in);

/// Empty field or "NA" parse as missing; anything else must be a complete
/// number with '.' as decimal separator.
std::optional<double> parse_number(std::string_view field, bool* is_missing);

/// Shortest round-trip decimal representation; missing (NaN) prints as "NA".
std::string format_number(double value);

/// Fixed-precision rendering used for figures.
std::string format_fixed(double value, int digits);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace wvp::csv
