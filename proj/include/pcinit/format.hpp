#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace pcinit {

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Parses a full decimal field; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);

/// Splits one CSV line on commas (no quoting; the formats here never need it).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace pcinit
