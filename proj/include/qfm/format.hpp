#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "qfm/rational.hpp"

namespace qfm {

// Reports print floats with 12 significant digits and rationals as "p/q".
inline std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.12g", value == 0.0 ? 0.0 : value);
  return buffer;
}

inline std::string format_number(const Rational& value) { return to_string(value); }

}  // namespace qfm
