#pragma once

#include <charconv>
#include <string>

namespace abpipe {

// Shortest text that parses back to exactly `value`; locale-independent.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace abpipe
