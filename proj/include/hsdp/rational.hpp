#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <string>
#include <string_view>

namespace hsdp {

using Rational = mpq_class;

// Exact parse of "12", "-0.05", "3/4". Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

// Integers print bare, terminating fractions print as decimals, anything else as n/d.
std::string format_rational(const Rational& r);

double to_double(const Rational& r);
std::size_t hash_rational(const Rational& r);

// Rational within `tol` of sqrt(r), r >= 0. Exact when r is a perfect square.
Rational sqrt_enclosure(const Rational& r, const Rational& tol, bool* exact = nullptr);

}  // namespace hsdp
