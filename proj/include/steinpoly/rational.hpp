#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>
#include <type_traits>

namespace steinpoly {

/// Exact rational scalar used for every polynomial coefficient that has to
/// satisfy an identity with zero residual.
using Rational = mpq_class;

/// Parses "3", "-3/10", "0.3", "1e-3", "2.5E+2" into an exact rational.
/// Decimal strings are read as the decimal number they spell, not as the
/// nearest binary double.
Rational parse_rational(std::string_view text);

/// Exact conversion of a binary double (every finite double is a dyadic rational).
Rational rational_from_double(double value);

std::string to_string(const Rational& value);

inline double to_double(const Rational& value) { return value.get_d(); }

/// Scalar conversion used by the templated polynomial code.
template <typename To>
To scalar_cast(const Rational& value) {
  if constexpr (std::is_same_v<To, Rational>) {
    return value;
  } else if constexpr (std::is_same_v<To, long double>) {
    // Two-term split keeps the full extended mantissa.
    const double hi = value.get_d();
    const Rational rest = value - Rational(hi);
    return static_cast<long double>(hi) + static_cast<long double>(rest.get_d());
  } else {
    return static_cast<To>(value.get_d());
  }
}

template <typename To>
To scalar_cast(double value) {
  if constexpr (std::is_same_v<To, Rational>) {
    return rational_from_double(value);
  } else {
    return static_cast<To>(value);
  }
}

template <typename To>
To scalar_cast(long double value) {
  if constexpr (std::is_same_v<To, Rational>) {
    return rational_from_double(static_cast<double>(value));
  } else {
    return static_cast<To>(value);
  }
}

/// Rising factorial (a)_k = a (a+1) ... (a+k-1).
Rational rising_factorial(const Rational& a, int k);

Rational binomial(long n, long k);

}  // namespace steinpoly
