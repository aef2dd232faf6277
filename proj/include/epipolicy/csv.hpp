#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace epipolicy::csv {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

// Throws SchemaError naming `what` when `text` is not a complete number.
double parse_number(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

std::string trim(std::string_view s);

// Reads lines, stripping a trailing '\r'. Returns false at end of input.
bool read_line(std::istream& in, std::string& line);

}  // namespace epipolicy::csv
