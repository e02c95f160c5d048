#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

namespace qfm {

// Exact arithmetic used for certification and oracles. Expression templates
// are off so generic code can use `auto` freely.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

// Accepts "p/q", integers, and decimal literals ("0.25", "-3", "1.5e-2").
// Throws std::invalid_argument on anything else.
Rational parse_rational(std::string_view text);

// Exact rational value of the shortest decimal that round-trips `value`, so
// 0.3 maps to 3/10 rather than to its binary expansion.
Rational rational_from_double(double value);

// "p/q", or "p" when the denominator is one.
std::string to_string(const Rational& value);

// Exact decimal rendering when the denominator only has factors 2 and 5.
std::optional<std::string> to_terminating_decimal(const Rational& value);

inline double to_double(double value) { return value; }
inline double to_double(const Rational& value) { return value.convert_to<double>(); }

template <class T>
T from_rational(const Rational& value) {
  if constexpr (is_exact_v<T>) {
    return value;
  } else {
    return value.convert_to<double>();
  }
}

template <class T>
T from_double(double value) {
  if constexpr (is_exact_v<T>) {
    return rational_from_double(value);
  } else {
    return value;
  }
}

template <class T>
T abs_value(const T& value) {
  return value < T(0) ? T(-value) : value;
}

}  // namespace qfm
