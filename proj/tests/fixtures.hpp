#pragma once

#include <algorithm>
#include <initializer_list>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "pssr/converse.hpp"
#include "pssr/core.hpp"
#include "pssr/errors.hpp"
#include "pssr/scheme_program.hpp"

namespace fixtures {

using namespace pssr;

// Sets given with 1-based indices.
inline SubsetMask set1(std::initializer_list<int> one_based) {
  std::vector<int> v;
  for (int i : one_based) v.push_back(i - 1);
  return SubsetMask::from_indices(v);
}

/// N=2, K=5, D=2 with W = {1,3},{2,3},{3,4},{4,5}.
inline DemandInstance example_instance() {
  DemandInstance inst;
  inst.servers = 2;
  inst.messages = 5;
  inst.demand_size = 2;
  inst.family = {set1({1, 3}), set1({2, 3}), set1({3, 4}), set1({4, 5})};
  return inst;
}

/// Symbol counts per server of the published optimum for the example, L = 8.
inline std::map<SubsetMask, std::int64_t> reference_symbol_counts() {
  return {{set1({2}), 1},          {set1({3}), 2},       {set1({4}), 1},          {set1({5}), 2},
          {set1({1, 3}), 1},       {set1({2, 4}), 1},    {set1({3, 5}), 2},       {set1({1, 2, 3}), 1},
          {set1({1, 3, 4}), 1},    {set1({1, 2, 3, 4}), 1}};
}

/// Exhaustive maximum over all orderings.
inline Rational brute_force_bound(const DemandInstance& inst) {
  std::vector<int> order(static_cast<std::size_t>(inst.family_size()));
  std::iota(order.begin(), order.end(), 0);
  Rational best = -1;
  do {
    best = std::max(best, ordering_value(inst, order));
  } while (std::next_permutation(order.begin(), order.end()));
  return Rational(inst.demand_size) / best;
}

/// (Σ_{j<E} N^{-j})^{-1}.
inline Rational geometric_capacity(int n, int e) {
  Rational s = 0, w = 1;
  for (int j = 0; j < e; ++j) {
    s += w;
    w /= n;
  }
  return 1 / s;
}

/// Random normalized instance with K in [kmin, kmax], D in [2, min(dmax, K-2)]
/// and E in [2, emax] distinct demand sets.
inline DemandInstance random_instance(std::mt19937_64& rng, int kmin, int kmax, int dmax, int emax) {
  for (;;) {
    const int k = std::uniform_int_distribution<int>(kmin, kmax)(rng);
    const int d = std::uniform_int_distribution<int>(2, std::max(2, std::min(dmax, k - 2)))(rng);
    const int e = std::uniform_int_distribution<int>(2, emax)(rng);
    DemandInstance raw;
    raw.servers = 2;
    raw.messages = k;
    raw.demand_size = d;
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    for (int tries = 0; raw.family_size() < e && tries < 50; ++tries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto w = SubsetMask::from_indices(std::vector<int>(idx.begin(), idx.begin() + d));
      if (std::find(raw.family.begin(), raw.family.end(), w) == raw.family.end()) raw.family.push_back(w);
    }
    try {
      return normalize_instance(raw).instance;
    } catch (const DegenerateInstance&) {
    }
  }
}

}  // namespace fixtures
