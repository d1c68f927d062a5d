#pragma once

// Exact rational with an inline 64-bit representation and transparent
// promotion to GMP when a result does not fit. Used for tableau entries,
// which in practice stay small.

#include <bit>
#include <compare>
#include <cstdint>
#include <memory>
#include <utility>

#include "pssr/rational.hpp"

namespace pssr::detail {

/// Binary gcd of |a| and |b|.
inline std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  std::uint64_t u = a < 0 ? 0 - static_cast<std::uint64_t>(a) : static_cast<std::uint64_t>(a);
  std::uint64_t v = b < 0 ? 0 - static_cast<std::uint64_t>(b) : static_cast<std::uint64_t>(b);
  if (u == 0) return static_cast<std::int64_t>(v);
  if (v == 0) return static_cast<std::int64_t>(u);
  const int shift = std::countr_zero(u | v);
  u >>= std::countr_zero(u);
  do {
    v >>= std::countr_zero(v);
    if (u > v) std::swap(u, v);
    v -= u;
  } while (v != 0);
  return static_cast<std::int64_t>(u << shift);
}

class SmallRational {
 public:
  SmallRational() = default;
  SmallRational(std::int64_t n) : n_(n), d_(1) {}  // NOLINT(implicit)
  explicit SmallRational(const Rational& q) { assign(q); }

  SmallRational(const SmallRational& o) : n_(o.n_), d_(o.d_) {
    if (o.big_) big_ = std::make_unique<Rational>(*o.big_);
  }
  SmallRational(SmallRational&&) noexcept = default;
  SmallRational& operator=(const SmallRational& o) {
    if (this != &o) {
      n_ = o.n_;
      d_ = o.d_;
      big_ = o.big_ ? std::make_unique<Rational>(*o.big_) : nullptr;
    }
    return *this;
  }
  SmallRational& operator=(SmallRational&&) noexcept = default;

  Rational to_rational() const {
    if (big_) return *big_;
    return Rational(BigInt(static_cast<long>(n_)), BigInt(static_cast<long>(d_)));
  }

  /// Nearest double; used only to rank pivot candidates.
  double approx() const {
    if (big_) return big_->get_d();
    return static_cast<double>(n_) / static_cast<double>(d_);
  }

  int sign() const {
    if (big_) return sgn(*big_);
    return (n_ > 0) - (n_ < 0);
  }
  bool is_zero() const { return !big_ && n_ == 0; }

  friend SmallRational operator+(const SmallRational& a, const SmallRational& b) {
    if (!a.big_ && !b.big_) {
      if (a.d_ == b.d_) {
        if (a.d_ == 1) return from128(static_cast<__int128>(a.n_) + b.n_, 1);
        const std::int64_t n = a.n_ + b.n_;  // both below 2^62 in magnitude
        if (n == 0) return SmallRational(0);
        const std::int64_t g = gcd64(n, a.d_);
        return SmallRational(n / g, a.d_ / g);
      }
      const std::int64_t g = a.d_ == 1 || b.d_ == 1 ? 1 : gcd64(a.d_, b.d_);
      const std::int64_t ad = a.d_ / g;
      const std::int64_t bd = b.d_ / g;
      __int128 n = static_cast<__int128>(a.n_) * bd + static_cast<__int128>(b.n_) * ad;
      if (n == 0) return SmallRational(0);
      __int128 d = static_cast<__int128>(ad) * b.d_;
      if (g != 1) {
        const std::int64_t r = n > -kLimit && n < kLimit ? static_cast<std::int64_t>(n) % g
                                                         : static_cast<std::int64_t>(n % g);
        const std::int64_t g2 = gcd64(r, g);
        if (g2 != 1) {
          n /= g2;
          d /= g2;
        }
      }
      return from128(n, d);
    }
    return from_big(a.to_rational() + b.to_rational());
  }
  friend SmallRational operator-(const SmallRational& a) {
    if (!a.big_) return SmallRational(-a.n_, a.d_);
    return from_big(-*a.big_);
  }
  friend SmallRational operator-(const SmallRational& a, const SmallRational& b) { return a + (-b); }
  friend SmallRational operator*(const SmallRational& a, const SmallRational& b) {
    if (!a.big_ && !b.big_) {
      if (a.n_ == 0 || b.n_ == 0) return SmallRational(0);
      if (a.d_ == 1 && b.d_ == 1) return from128(static_cast<__int128>(a.n_) * b.n_, 1);
      const std::int64_t g1 = b.d_ == 1 ? 1 : gcd64(a.n_, b.d_);
      const std::int64_t g2 = a.d_ == 1 ? 1 : gcd64(b.n_, a.d_);
      const __int128 n = static_cast<__int128>(a.n_ / g1) * (b.n_ / g2);
      const __int128 d = static_cast<__int128>(a.d_ / g2) * (b.d_ / g1);
      return from128(n, d);
    }
    return from_big(a.to_rational() * b.to_rational());
  }
  friend SmallRational operator/(const SmallRational& a, const SmallRational& b) {
    if (!b.big_) {
      // b != 0 is the caller's responsibility.
      SmallRational inv = b.n_ < 0 ? SmallRational(-b.d_, -b.n_) : SmallRational(b.d_, b.n_);
      return a * inv;
    }
    return from_big(a.to_rational() / b.to_rational());
  }
  SmallRational& operator+=(const SmallRational& o) { return *this = *this + o; }
  SmallRational& operator-=(const SmallRational& o) { return *this = *this - o; }
  SmallRational& operator*=(const SmallRational& o) { return *this = *this * o; }
  SmallRational& operator/=(const SmallRational& o) { return *this = *this / o; }

  friend bool operator==(const SmallRational& a, const SmallRational& b) {
    if (!a.big_ && !b.big_) return a.n_ == b.n_ && a.d_ == b.d_;
    return a.to_rational() == b.to_rational();
  }
  friend std::strong_ordering operator<=>(const SmallRational& a, const SmallRational& b) {
    if (!a.big_ && !b.big_) {
      const __int128 l = static_cast<__int128>(a.n_) * b.d_;
      const __int128 r = static_cast<__int128>(b.n_) * a.d_;
      return l <=> r;
    }
    const int c = cmp(a.to_rational(), b.to_rational());
    return c <=> 0;
  }

  /// a·d versus b·c without forming the products' normal forms: sign of
  /// (x/y) - (z/w) for the ratio test, where y, w > 0.
  static int compare_ratios(const SmallRational& x, const SmallRational& y, const SmallRational& z,
                            const SmallRational& w) {
    const auto o = (x * w) <=> (z * y);
    return o < 0 ? -1 : (o > 0 ? 1 : 0);
  }

 private:
  // Values kept in the inline form satisfy |n|, d < 2^62.
  static constexpr std::int64_t kLimit = std::int64_t{1} << 62;

  SmallRational(std::int64_t n, std::int64_t d) : n_(n), d_(d) {}

  static unsigned __int128 abs128(__int128 v) {
    return v < 0 ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  }

  // n/d already in lowest terms, d > 0.
  static SmallRational from128(__int128 n, __int128 d) {
    if (n > -kLimit && n < kLimit && d < kLimit) {
      return SmallRational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
    }
    return from_big(Rational(to_big(n), to_big(d)));
  }

  static BigInt to_big(__int128 v) {
    const bool neg = v < 0;
    unsigned __int128 u = abs128(v);
    BigInt hi(static_cast<unsigned long>(static_cast<std::uint64_t>(u >> 64)));
    BigInt lo(static_cast<unsigned long>(static_cast<std::uint64_t>(u)));
    BigInt out = (hi << 64) + lo;
    return neg ? BigInt(-out) : out;
  }

  static SmallRational from_big(const Rational& q) {
    SmallRational r;
    r.assign(q);
    return r;
  }

  void assign(const Rational& q) {
    const auto& num = q.get_num();
    const auto& den = q.get_den();
    if (num.fits_slong_p() && den.fits_slong_p()) {
      const long n = num.get_si();
      const long d = den.get_si();
      if (n > -kLimit && n < kLimit && d < kLimit) {
        n_ = n;
        d_ = d;
        big_.reset();
        return;
      }
    }
    big_ = std::make_unique<Rational>(q);
    n_ = 0;
    d_ = 1;
  }

  std::int64_t n_ = 0;
  std::int64_t d_ = 1;
  std::unique_ptr<Rational> big_;
};

}  // namespace pssr::detail
