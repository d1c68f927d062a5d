#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace pssr {

/// Hard ceiling on the number of messages a SubsetMask can address.
inline constexpr int kMaxMaskBits = 31;
/// Default cap on K for instances that enumerate subsets of [1:K].
inline constexpr int kDefaultMessageCap = 24;

/// A set of message indices stored as a bit vector. Bit b holds the
/// (0-based) message b, i.e. message b+1 in external numbering.
class SubsetMask {
 public:
  constexpr SubsetMask() = default;
  constexpr explicit SubsetMask(std::uint32_t bits) : bits_(bits) {}

  /// Builds a mask from 0-based message indices.
  static SubsetMask of(std::initializer_list<int> messages);
  static SubsetMask from_indices(const std::vector<int>& messages);
  /// All messages [0, k).
  static constexpr SubsetMask full(int k) {
    return SubsetMask(k >= 32 ? ~0u : ((1u << k) - 1u));
  }
  static constexpr SubsetMask single(int message) {
    return SubsetMask(1u << message);
  }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool contains(int message) const { return (bits_ >> message) & 1u; }
  constexpr bool subset_of(SubsetMask other) const { return (bits_ & ~other.bits_) == 0; }
  /// Highest message index + 1 (0 for the empty set).
  constexpr int width() const { return 32 - std::countl_zero(bits_); }

  constexpr SubsetMask operator|(SubsetMask o) const { return SubsetMask(bits_ | o.bits_); }
  constexpr SubsetMask operator&(SubsetMask o) const { return SubsetMask(bits_ & o.bits_); }
  /// Set difference.
  constexpr SubsetMask operator-(SubsetMask o) const { return SubsetMask(bits_ & ~o.bits_); }
  constexpr SubsetMask with(int message) const { return SubsetMask(bits_ | (1u << message)); }
  constexpr SubsetMask without(int message) const { return SubsetMask(bits_ & ~(1u << message)); }

  constexpr auto operator<=>(const SubsetMask&) const = default;

  /// 0-based members in ascending order.
  std::vector<int> members() const;
  /// 1-based members, e.g. "{1,3}".
  std::string to_string() const;

 private:
  std::uint32_t bits_ = 0;
};

/// All submasks of `of` (including the empty set and `of` itself), in
/// ascending order of integer value.
std::vector<SubsetMask> submasks(SubsetMask of);

/// Calls fn(sub) for every submask of `of` in ascending order.
template <class Fn>
void for_each_submask(SubsetMask of, Fn&& fn) {
  const std::uint32_t m = of.bits();
  std::uint32_t s = 0;
  while (true) {
    fn(SubsetMask(s));
    if (s == m) break;
    s = (s - m) & m;
  }
}

enum class FamilyKind { Explicit, Full, Contiguous, Partition };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

/// N servers, K messages, demand size D and the candidate demand sets.
struct DemandInstance {
  int servers = 0;
  int messages = 0;
  int demand_size = 0;
  std::vector<SubsetMask> family;
  /// How the family was produced; only Full enables symmetry reductions.
  FamilyKind kind = FamilyKind::Explicit;

  int family_size() const { return static_cast<int>(family.size()); }
  const SubsetMask& demand(int j) const { return family.at(static_cast<std::size_t>(j)); }

  /// Basic shape checks: sizes, cardinalities, distinctness, index range.
  /// Throws InvalidInput naming the offending field.
  void validate(int message_cap = kDefaultMessageCap) const;
  bool is_normalized() const;

  bool operator==(const DemandInstance&) const = default;
};

/// Maps normalized message positions back to the caller's numbering.
struct IndexRemap {
  /// original_index[k] is the 1-based original index of normalized message k.
  std::vector<int> original_index;
  /// 1-based original indices dropped because no demand set contains them.
  std::vector<int> dropped_unused;
  /// 1-based original indices dropped because every demand set contains them.
  std::vector<int> dropped_universal;

  bool identity() const { return dropped_unused.empty() && dropped_universal.empty(); }
};

struct NormalizedInstance {
  DemandInstance instance;
  IndexRemap remap;
};

/// Deletes messages that are in no demand set or in every demand set and
/// renumbers the rest. Throws DegenerateInstance when the family collapses.
NormalizedInstance normalize_instance(const DemandInstance& raw);

/// Builds the canonical (mask-sorted) family of the given kind.
DemandInstance generate_family(FamilyKind kind, int servers, int messages, int demand_size);

/// All V ⊆ W_j \ S with |V| = l, ascending by mask value.
std::vector<SubsetMask> enum_V(const DemandInstance& inst, int j, SubsetMask s, int l);

/// All U ⊆ [K] \ S with U ⊄ W_j and |U ∩ W_j| = l, ascending by mask value.
std::vector<SubsetMask> enum_U(const DemandInstance& inst, int j, SubsetMask s, int l);

/// Every U ⊆ [K] \ S with U ⊄ W_j, over all l in [0:D-1].
std::vector<SubsetMask> enum_U_all(const DemandInstance& inst, int j, SubsetMask s);

std::uint64_t binomial(int n, int k);

}  // namespace pssr
