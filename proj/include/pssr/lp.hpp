#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pssr/rational.hpp"

namespace pssr {

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Minimize, Maximize };

struct Term {
  int var = 0;
  Rational coef;
};

/// Sparse linear form. Rows stored in a ConstraintProgram are sorted by
/// variable id, duplicate-free and contain no zero coefficients.
using Row = std::vector<Term>;

struct Variable {
  std::string name;
  Rational lower = 0;
  std::optional<Rational> upper;
  bool integral = false;
};

struct Constraint {
  Row row;
  Relation relation = Relation::LessEqual;
  Rational rhs;
  std::string name;
};

/// Linear (or integer) program over exact rationals.
class ConstraintProgram {
 public:
  int add_variable(std::string name, bool integral = false, Rational lower = 0,
                   std::optional<Rational> upper = std::nullopt);
  /// Merges duplicate terms and drops zero coefficients. Throws InvalidInput
  /// on an undeclared variable.
  void add_constraint(const Row& row, Relation relation, Rational rhs, std::string name = {});
  void set_objective(const Row& row, Sense sense);

  /// Pins var to value by collapsing its bounds.
  void fix_variable(int var, const Rational& value);
  void set_bounds(int var, Rational lower, std::optional<Rational> upper);

  int variable_count() const { return static_cast<int>(variables_.size()); }
  int constraint_count() const { return static_cast<int>(constraints_.size()); }
  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(int var) const { return variables_.at(static_cast<std::size_t>(var)); }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Row& objective() const { return objective_; }
  Sense sense() const { return sense_; }

  Rational evaluate(const Row& row, const std::vector<Rational>& x) const;
  Rational objective_value(const std::vector<Rational>& x) const { return evaluate(objective_, x); }
  /// Human-readable list of every violated row, bound or integrality flag.
  std::vector<std::string> violations(const std::vector<Rational>& x, bool check_integrality = true) const;

 private:
  Row canonical(const Row& row) const;

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Row objective_;
  Sense sense_ = Sense::Minimize;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, BudgetExceeded };
std::string to_string(SolveStatus status);

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<Rational> values;
  Rational objective;
  /// Row multipliers of an optimal LP basis (empty for ILP results).
  std::vector<Rational> duals;
  long pivots = 0;
  long nodes = 0;
  /// For an ILP stopped by its budget: the best proven bound on the optimum.
  std::optional<Rational> best_bound;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SolveOptions {
  long max_pivots = 2'000'000;
  long max_nodes = 200'000;
  /// Zero means no wall-clock limit.
  std::chrono::milliseconds time_limit{0};
  /// Consecutive degenerate pivots tolerated before switching to the
  /// smallest-index rule until the objective moves again.
  int degenerate_streak_limit = 100;
  /// Open-node count between best-bound restarts in branch-and-bound.
  int restart_interval = 64;
  /// Known feasible integral point used to seed branch-and-bound.
  std::optional<std::vector<Rational>> incumbent;
  /// Look for the optimal basis with a floating-point simplex first, then
  /// certify it exactly. The exact simplex takes over whenever the
  /// certificate fails.
  bool float_guide = true;
};

/// Exact two-phase primal simplex. Integrality flags are ignored.
Solution solve_lp(const ConstraintProgram& program, const SolveOptions& options = {});

/// Branch-and-bound over exact LP relaxations.
Solution solve_ilp(const ConstraintProgram& program, const SolveOptions& options = {});

/// Checks that `solution.duals` certify optimality of `solution.values`
/// (dual feasibility, sign conditions, equal objectives). Returns the
/// reasons it does not; empty means certified.
std::vector<std::string> verify_dual_certificate(const ConstraintProgram& program, const Solution& solution);

/// Writes the program in CPLEX LP text format. Each row is scaled by the lcm
/// of its denominators so every coefficient is an exact integer.
void write_lp_format(std::ostream& os, const ConstraintProgram& program);

}  // namespace pssr
