#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <type_traits>

namespace pcacouple {

using Rational = mpq_class;

/// Arithmetic used by a table or a computation.
enum class Arithmetic { Float, Exact };

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static double from_double(double x) { return x; }
  static double from_rational(const Rational& q) { return q.get_d(); }
  static double to_double(double x) { return x; }
  static std::string to_string(double x);
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  /// Exact binary value of the double, no rounding.
  static Rational from_double(double x) { return Rational(x); }
  static Rational from_rational(const Rational& q) { return q; }
  static double to_double(const Rational& q) { return q.get_d(); }
  static std::string to_string(const Rational& q) { return q.get_str(); }
};

inline std::string ScalarTraits<double>::to_string(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

template <class T>
inline constexpr bool is_exact_v = ScalarTraits<T>::exact;

template <class T>
T scalar_abs(const T& x) {
  if constexpr (is_exact_v<T>) {
    return abs(x);
  } else {
    return std::fabs(x);
  }
}

/// Parses "3/4", "0.25", "-1" or "1e-3" into an exact rational. Decimal and
/// scientific literals are read exactly in base ten.
Rational parse_rational(const std::string& text);

}  // namespace pcacouple
