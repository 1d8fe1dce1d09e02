#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>

#include "classim/errors.hpp"

namespace classim {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_exact(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Value rounded to `digits` significant digits, locale independent.
inline std::string format_sig(double v, int digits = 12) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

/// Rounds to `digits` significant digits and returns the nearest double.
inline double round_sig(double v, int digits = 12) {
  if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
  const std::string s = format_sig(v, digits);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

inline double parse_double(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double out = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("invalid number '" + std::string(s) + "'");
  }
  return out;
}

inline long parse_int(std::string_view s) {
  long out = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("invalid integer '" + std::string(s) + "'");
  }
  return out;
}

}  // namespace classim
