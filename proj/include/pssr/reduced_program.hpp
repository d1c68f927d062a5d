#pragma once

#include <map>
#include <tuple>

#include "pssr/lp.hpp"
#include "pssr/rational.hpp"

namespace pssr {

/// Variables of the symmetry-reduced program for the full family, where
/// every count depends only on intersection sizes.
struct ReducedIndexing {
  /// t[u]: symbols with support size u, per support.
  std::map<int, int> t;
  /// i[(u1, u2, v)]: pairings with u1 interference, u2 shared demand and v
  /// recovered demand messages.
  std::map<std::tuple<int, int, int>, int> i;
  /// j[(v, k)]: uses of a size-v demand-only support in round k.
  std::map<std::pair<int, int>, int> j;
  int l = -1;
};

struct ReducedProgram {
  ConstraintProgram program;
  ReducedIndexing index;
  std::size_t side_target_rows = 0;
};

/// Normalized (L = 1) reduced program for the family of all D-subsets of K
/// messages; minimizes the total symbols per server.
ReducedProgram build_reduced_full_family_program(int servers, int messages, int demand_size);

/// The reduced program restricted to the structure of the known
/// multi-message scheme (no shared demand messages in pairings, fixed
/// pairing and recovery counts).
ReducedProgram build_mpir_restricted_program(int servers, int messages, int demand_size);

struct ReducedResult {
  Rational rate;
  Rational normalized_total;
  Solution solution;
};

ReducedResult solve_reduced(const ReducedProgram& rp, int servers, int demand_size, const SolveOptions& options = {});

}  // namespace pssr
