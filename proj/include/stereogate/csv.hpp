#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stereogate::csv {

using Row = std::vector<std::string>;

// Comma-delimited text with optional double-quoted fields ("" escapes a
// quote inside a quoted field). Blank lines are skipped. Line endings may
// be LF or CRLF.
std::vector<Row> parse(std::string_view text);

// Quotes a field only when it contains a comma, quote or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Strict parse of the whole field; nullopt on any trailing garbage or an
// empty field. Non-finite spellings ("nan", "inf") parse successfully and
// are left to the caller to reject.
std::optional<double> parse_double(std::string_view field);

}  // namespace stereogate::csv
