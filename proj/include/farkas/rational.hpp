#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace farkas {

using Rational = mpq_class;

// Accepts "p/q", integers and decimals with an optional exponent ("0.25", "-1e-3").
// Decimal strings are converted exactly.
Rational parse_rational(std::string_view text);

// Canonical form: "p/q" or "p" when the denominator is one.
std::string to_string(const Rational& value);

inline double to_double(const Rational& value) { return value.get_d(); }

// Nearest fraction with the given denominator. The only route from double to rational.
Rational rationalize(double value, unsigned long denominator);

// Best approximation with denominator at most maxDenominator (continued fractions).
Rational approximate(double value, unsigned long maxDenominator);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace farkas
