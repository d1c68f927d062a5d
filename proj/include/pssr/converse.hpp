#pragma once

#include <cstdint>
#include <vector>

#include "pssr/core.hpp"
#include "pssr/rational.hpp"

namespace pssr {

struct ConverseOptions {
  /// Search nodes (partial orderings) visited before giving up. Zero: unlimited.
  std::uint64_t max_permutations = 50'000'000;
  /// Branch-and-bound pruning on the optimistic completion bound.
  bool prune = true;
  /// For full families, branch on one representative per relabeling orbit.
  bool orbit_reduction = true;
};

struct ConverseReport {
  Rational rate_upper_bound;
  /// 1-based family indices, in the order attaining the maximum.
  std::vector<int> witness;
  bool orbit_reduction_used = false;
  /// Complete orderings evaluated plus partial orderings expanded.
  std::uint64_t permutations_examined = 0;
};

/// Weighted new-coverage sum Σ_j N^{-(j-1)} |W_π(j) \ earlier| for a 0-based
/// ordering of the family.
Rational ordering_value(const DemandInstance& inst, const std::vector<int>& order);

/// D divided by the maximum of ordering_value over all orderings. The
/// reported witness is the lexicographically first maximizer explored.
/// Throws BudgetExceeded when the search outgrows max_permutations.
ConverseReport rate_upper_bound(const DemandInstance& inst, const ConverseOptions& options = {});

struct SubpacketizationBound {
  BigInt value;
  bool divisible_by_servers = false;
};

/// Smallest L for which D·L / (N·rate) is a positive integer.
SubpacketizationBound subpacketization_lower_bound(int servers, int demand_size, const Rational& rate);

}  // namespace pssr
