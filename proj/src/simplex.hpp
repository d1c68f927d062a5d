#pragma once

// Internal entry point shared by the LP and ILP drivers.

#include <chrono>
#include <optional>
#include <vector>

#include "pssr/lp.hpp"

namespace pssr::detail {

using Clock = std::chrono::steady_clock;

struct Bounds {
  std::vector<Rational> lower;
  std::vector<std::optional<Rational>> upper;
};

Bounds program_bounds(const ConstraintProgram& program);

/// Solves the LP relaxation of `program` under the given variable bounds.
/// `deadline` of nullopt means unlimited.
Solution solve_relaxation(const ConstraintProgram& program, const Bounds& bounds, const SolveOptions& options,
                          std::optional<Clock::time_point> deadline);

std::optional<Clock::time_point> deadline_from(const SolveOptions& options);

}  // namespace pssr::detail
