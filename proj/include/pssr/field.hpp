#pragma once

#include <cstdint>
#include <vector>

namespace pssr {

/// A small finite field: GF(p) for a prime p < 2^31, or GF(2^m) for
/// m in [1:8] with table-based multiplication.
class FiniteField {
 public:
  /// Throws InvalidInput for orders that are neither prime nor 2^m.
  explicit FiniteField(std::uint32_t order);

  std::uint32_t order() const { return q_; }
  bool binary() const { return m_ > 0; }

  std::uint32_t add(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t sub(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t neg(std::uint32_t a) const;
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const;
  /// Maps an arbitrary 64-bit word onto a field element.
  std::uint32_t from_word(std::uint64_t w) const { return static_cast<std::uint32_t>(w % q_); }

 private:
  std::uint32_t q_ = 2;
  int m_ = 0;
  std::vector<std::uint8_t> log_;
  std::vector<std::uint8_t> exp_;
};

bool is_prime(std::uint32_t n);

}  // namespace pssr
