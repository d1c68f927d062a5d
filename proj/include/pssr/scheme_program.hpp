#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pssr/core.hpp"
#include "pssr/lp.hpp"
#include "pssr/rational.hpp"

namespace pssr {

/// Side/target pairing count key: demand j (0-based), interference support
/// U, demand part V.
struct PairKey {
  int j = 0;
  SubsetMask u;
  SubsetMask v;
  auto operator<=>(const PairKey&) const = default;
};

/// Recovery-use key: demand j, demand-only support V, recovered message
/// (0-based) and round k.
struct RecoveryKey {
  int j = 0;
  SubsetMask v;
  int message = 0;
  int round = 0;
  auto operator<=>(const RecoveryKey&) const = default;
};

struct VariableIndexing {
  std::map<SubsetMask, int> t;
  std::map<PairKey, int> i;
  std::map<RecoveryKey, int> j;
  int l = -1;

  int t_var(SubsetMask u) const;
  int i_var(const PairKey& key) const;
  int j_var(const RecoveryKey& key) const;
};

/// Integral scheme: per-server symbol counts by support, pairings and
/// recovery uses, at subpacketization L. Only nonzero entries are stored.
struct SchemeCounts {
  DemandInstance instance;
  std::int64_t l = 0;
  std::map<SubsetMask, std::int64_t> t;
  std::map<PairKey, std::int64_t> i;
  std::map<RecoveryKey, std::int64_t> j;

  std::int64_t t_of(SubsetMask u) const;
  std::int64_t i_of(const PairKey& key) const;
  std::int64_t j_of(const RecoveryKey& key) const;
  /// Symbols downloaded from each server.
  std::int64_t t_total() const;
  /// D·L / (N·T_total).
  Rational rate() const;

  bool operator==(const SchemeCounts&) const = default;
};

/// The "naive" scheme: every demandable message read directly, L = N.
SchemeCounts naive_counts(const DemandInstance& inst);

enum class ProgramScaling {
  /// L pinned to 1 and counts continuous: the rate LP.
  Normalized,
  /// L a free positive integer and every count integral.
  Integral,
};

struct GeneralProgram {
  ConstraintProgram program;
  VariableIndexing index;
};

struct ProgramStats {
  std::size_t t_vars = 0, i_vars = 0, j_vars = 0;
  std::size_t side_target_rows = 0, quota_rows = 0, availability_rows = 0, round_rows = 0, reuse_rows = 0;
};

/// Closed-form variable and row counts of the general program.
ProgramStats expected_program_stats(const DemandInstance& inst);

/// All count and recovery constraints for a normalized instance, with the
/// objective "minimize symbols per server".
GeneralProgram build_general_program(const DemandInstance& inst, ProgramScaling scaling,
                                     int message_cap = kDefaultMessageCap, ProgramStats* stats = nullptr);

std::vector<Rational> counts_to_values(const GeneralProgram& gp, const SchemeCounts& counts);
/// Reads an integral assignment back into counts. Throws on fractional values.
SchemeCounts counts_from_values(const DemandInstance& inst, const VariableIndexing& index,
                                const std::vector<Rational>& values);

struct RateResult {
  Rational rate;
  /// Optimal symbols per server per unit of L.
  Rational normalized_total;
  /// lcm of the denominators of the LP vertex.
  BigInt lift_multiplier;
  /// Lifted integral scheme, L = lcm(lift multiplier, N).
  SchemeCounts counts;
  long pivots = 0;
};

/// Solves the rate LP and lifts its vertex to an integral scheme. When an
/// upper bound is supplied the result is checked against it.
RateResult maximize_rate(const DemandInstance& inst, const SolveOptions& options = {},
                         const std::optional<Rational>& upper_bound = std::nullopt);

struct CandidateOutcome {
  std::int64_t l = 0;
  SolveStatus status = SolveStatus::Infeasible;
  long nodes = 0;
};

struct SubpacketizationResult {
  SchemeCounts counts;
  BigInt lower_bound;
  /// False when a candidate ran out of budget; counts then hold the best
  /// verified scheme and [lower_bound, counts.l] brackets the optimum.
  bool proven_minimal = true;
  std::vector<CandidateOutcome> candidates;
};

/// Smallest L admitting an integral scheme at the given rate: scans
/// multiples of lcm(L_*, N) up to the L of `upper`, solving one
/// feasibility ILP per candidate.
SubpacketizationResult minimize_subpacketization(const DemandInstance& inst, const Rational& rate,
                                                 const SchemeCounts& upper, const SolveOptions& options = {});

/// Same question as one ILP with L free, minimized directly.
SubpacketizationResult minimize_subpacketization_free(const DemandInstance& inst, const Rational& rate,
                                                      const SchemeCounts& upper, const SolveOptions& options = {});

/// Finds pairing and recovery counts for fixed symbol counts T and a fixed
/// L. Throws Infeasible when none exist and BudgetExceeded when the search
/// gives up.
SchemeCounts complete_recovery_counts(const DemandInstance& inst, const std::map<SubsetMask, std::int64_t>& t,
                                      std::int64_t l, const SolveOptions& options = {});

/// Independent evaluation of every scheme constraint, written directly over
/// subsets rather than through a ConstraintProgram. Empty means valid.
std::vector<std::string> check_scheme_counts(const SchemeCounts& counts);

}  // namespace pssr
