#include "pssr/rational.hpp"

#include "pssr/errors.hpp"

namespace pssr {

Rational make_rational(long n, long d) {
  if (d == 0) throw InvalidInput("rational with zero denominator");
  Rational r(n, d);
  r.canonicalize();
  return r;
}

Rational make_rational(const BigInt& n, const BigInt& d) {
  if (d == 0) throw InvalidInput("rational with zero denominator");
  Rational r(n, d);
  r.canonicalize();
  return r;
}

std::string to_string(const Rational& r) {
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  BigInt num, den = 1;
  try {
    if (slash == std::string::npos) {
      num = BigInt(text);
    } else {
      num = BigInt(text.substr(0, slash));
      den = BigInt(text.substr(slash + 1));
    }
  } catch (const std::invalid_argument&) {
    throw InvalidInput("not a rational number: '" + text + "'");
  }
  return make_rational(num, den);
}

BigInt floor(const Rational& r) {
  BigInt q;
  mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

BigInt ceil(const Rational& r) {
  BigInt q;
  mpz_cdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

bool is_integer(const Rational& r) { return r.get_den() == 1; }

BigInt lcm(const BigInt& a, const BigInt& b) {
  BigInt out;
  mpz_lcm(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

BigInt gcd(const BigInt& a, const BigInt& b) {
  BigInt out;
  mpz_gcd(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

long to_long(const BigInt& v) {
  if (!v.fits_slong_p()) throw InvalidInput("integer too large: " + v.get_str());
  return v.get_si();
}

IntegralLift lift_to_integral(const std::vector<Rational>& values) {
  IntegralLift out;
  out.multiplier = 1;
  for (const auto& v : values) out.multiplier = lcm(out.multiplier, v.get_den());
  out.values.reserve(values.size());
  for (const auto& v : values) out.values.push_back(v.get_num() * (out.multiplier / v.get_den()));
  return out;
}

}  // namespace pssr
