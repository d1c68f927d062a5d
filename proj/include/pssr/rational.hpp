#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

namespace pssr {

/// Exact fraction over arbitrary-precision integers. GMP keeps every value
/// canonical (positive denominator, coprime parts) after each operation.
using Rational = mpq_class;
using BigInt = mpz_class;

/// n/d in lowest terms. Throws InvalidInput on a zero denominator.
Rational make_rational(long n, long d = 1);
Rational make_rational(const BigInt& n, const BigInt& d);

/// Always "numerator/denominator", e.g. "8/13", "2/1", "-3/4".
std::string to_string(const Rational& r);
/// Accepts "a/b" or a bare integer "a".
Rational parse_rational(const std::string& text);

BigInt floor(const Rational& r);
BigInt ceil(const Rational& r);
bool is_integer(const Rational& r);

BigInt lcm(const BigInt& a, const BigInt& b);
BigInt gcd(const BigInt& a, const BigInt& b);

/// Lossless conversion; throws InvalidInput when the value does not fit.
long to_long(const BigInt& v);

/// Smallest positive multiplier making every value integral, with the scaled
/// values. The multiplier is the lcm of all denominators.
struct IntegralLift {
  BigInt multiplier;
  std::vector<BigInt> values;
};
IntegralLift lift_to_integral(const std::vector<Rational>& values);

}  // namespace pssr
