#include "pssr/field.hpp"

#include <bit>
#include <string>

#include "pssr/errors.hpp"

namespace pssr {

bool is_prime(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

namespace {

// Primitive polynomials for GF(2^m), m = 1..8.
constexpr std::uint32_t kPrimitive[9] = {0, 0x3, 0x7, 0xb, 0x13, 0x25, 0x43, 0x89, 0x11d};

}  // namespace

FiniteField::FiniteField(std::uint32_t order) : q_(order) {
  if (is_prime(order)) {
    if (order >= (1u << 31)) throw InvalidInput("field order too large");
    return;
  }
  if (order >= 4 && std::has_single_bit(order) && order <= 256) {
    m_ = std::countr_zero(order);
    exp_.assign(2 * order, 0);
    log_.assign(order, 0);
    std::uint32_t x = 1;
    for (std::uint32_t i = 0; i + 1 < order; ++i) {
      exp_[i] = static_cast<std::uint8_t>(x);
      log_[x] = static_cast<std::uint8_t>(i);
      x <<= 1;
      if (x & order) x ^= kPrimitive[m_];
    }
    for (std::uint32_t i = order - 1; i < 2 * order; ++i) exp_[i] = exp_[i - (order - 1)];
    return;
  }
  throw InvalidInput("unsupported field order " + std::to_string(order) + " (need a prime or 2^m with m <= 8)");
}

std::uint32_t FiniteField::add(std::uint32_t a, std::uint32_t b) const {
  if (m_) return a ^ b;
  const std::uint64_t s = std::uint64_t{a} + b;
  return static_cast<std::uint32_t>(s >= q_ ? s - q_ : s);
}

std::uint32_t FiniteField::neg(std::uint32_t a) const {
  if (m_ || a == 0) return a;
  return q_ - a;
}

std::uint32_t FiniteField::sub(std::uint32_t a, std::uint32_t b) const { return add(a, neg(b)); }

std::uint32_t FiniteField::mul(std::uint32_t a, std::uint32_t b) const {
  if (a == 0 || b == 0) return 0;
  if (m_) return exp_[std::uint32_t{log_[a]} + log_[b]];
  return static_cast<std::uint32_t>(std::uint64_t{a} * b % q_);
}

}  // namespace pssr
