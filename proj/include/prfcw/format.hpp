#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace prfcw {

/// Shortest round-trip decimal form; "nan" for NaN.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace prfcw
