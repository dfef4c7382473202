#pragma once

// Small text helpers shared by the file readers and writers.

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace sgdchain::text {

/// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Throws InvalidArgument on anything but a complete finite-or-not number.
double parse_double(std::string_view s);
unsigned long long parse_u64(std::string_view s);

}  // namespace sgdchain::text
