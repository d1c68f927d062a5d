#include <algorithm>
#include <deque>

#include "pssr/errors.hpp"
#include "pssr/lp.hpp"
#include "simplex.hpp"

namespace pssr {

namespace {

struct Node {
  detail::Bounds bounds;
  Rational bound;  // relaxation value of the parent, in minimization orientation
};

bool integral_objective(const ConstraintProgram& program) {
  for (const auto& t : program.objective()) {
    if (!program.variable(t.var).integral || !is_integer(t.coef)) return false;
  }
  return true;
}

// Most fractional integral variable, or -1.
int branching_variable(const ConstraintProgram& program, const std::vector<Rational>& x) {
  int best = -1;
  Rational best_dist = -1;
  const Rational half(1, 2);
  for (int j = 0; j < program.variable_count(); ++j) {
    if (!program.variable(j).integral) continue;
    const Rational& v = x[static_cast<std::size_t>(j)];
    if (is_integer(v)) continue;
    Rational frac = v - Rational(floor(v));
    Rational dist = abs(frac - half);
    // Smaller distance to 1/2 is more fractional.
    if (best < 0 || dist < best_dist) {
      best = j;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

Solution solve_ilp(const ConstraintProgram& program, const SolveOptions& options) {
  const auto deadline = detail::deadline_from(options);
  const bool maximize = program.sense() == Sense::Maximize;
  const bool integral_obj = integral_objective(program);
  auto oriented = [&](const Rational& v) { return maximize ? Rational(-v) : v; };

  Solution best;
  best.status = SolveStatus::Infeasible;
  std::optional<Rational> incumbent_value;  // minimization orientation

  if (options.incumbent) {
    if (!program.violations(*options.incumbent).empty()) {
      throw InvalidInput("seed incumbent is not a feasible integral point");
    }
    best.status = SolveStatus::Optimal;
    best.values = *options.incumbent;
    best.objective = program.objective_value(best.values);
    incumbent_value = oriented(best.objective);
  }

  // A node can only improve on the incumbent if its bound is strictly better,
  // after rounding up when the objective is integral on integral points.
  auto prunable = [&](const Rational& bound) {
    if (!incumbent_value) return false;
    if (integral_obj) return Rational(ceil(bound)) >= *incumbent_value;
    return bound >= *incumbent_value;
  };

  std::vector<Node> open;
  open.push_back(Node{detail::program_bounds(program), Rational(0)});
  bool have_root = false;
  long nodes = 0;
  long pivots = 0;
  long since_restart = 0;
  bool unbounded = false;

  auto finish_budget = [&]() {
    Solution out = best;
    out.status = SolveStatus::BudgetExceeded;
    Rational lb;
    bool any = false;
    for (const auto& n : open) {
      if (!any || n.bound < lb) lb = n.bound;
      any = true;
    }
    if (!any && incumbent_value) lb = *incumbent_value;
    if (any || incumbent_value) out.best_bound = maximize ? Rational(-lb) : lb;
    out.nodes = nodes;
    out.pivots = pivots;
    out.duals.clear();
    return out;
  };

  while (!open.empty()) {
    if (nodes >= options.max_nodes) return finish_budget();
    if (deadline && detail::Clock::now() > *deadline) return finish_budget();

    if (since_restart >= options.restart_interval) {
      // Best-bound restart: move the most promising open node to the top.
      auto it = std::min_element(open.begin(), open.end(),
                                 [](const Node& a, const Node& b) { return a.bound < b.bound; });
      std::iter_swap(it, open.end() - 1);
      since_restart = 0;
    }

    Node node = std::move(open.back());
    open.pop_back();
    if (have_root && prunable(node.bound)) continue;
    ++nodes;
    ++since_restart;

    SolveOptions lp_opts = options;
    lp_opts.max_pivots = std::max<long>(1, options.max_pivots - pivots);
    Solution rel = detail::solve_relaxation(program, node.bounds, lp_opts, deadline);
    pivots += rel.pivots;
    if (rel.status == SolveStatus::BudgetExceeded) {
      open.push_back(std::move(node));
      return finish_budget();
    }
    if (rel.status == SolveStatus::Infeasible) {
      have_root = true;
      continue;
    }
    if (rel.status == SolveStatus::Unbounded) {
      if (!have_root) unbounded = true;
      have_root = true;
      if (unbounded) break;
      continue;
    }
    have_root = true;
    const Rational value = oriented(rel.objective);
    if (prunable(value)) continue;

    const int j = branching_variable(program, rel.values);
    if (j < 0) {
      best.status = SolveStatus::Optimal;
      best.values = rel.values;
      best.objective = rel.objective;
      incumbent_value = value;
      continue;
    }
    const Rational& v = rel.values[static_cast<std::size_t>(j)];
    Node down{node.bounds, value};
    Node up{std::move(node.bounds), value};
    down.bounds.upper[static_cast<std::size_t>(j)] = Rational(floor(v));
    up.bounds.lower[static_cast<std::size_t>(j)] = Rational(ceil(v));
    // Explore the branch closer to the relaxation value first.
    const Rational frac = v - Rational(floor(v));
    if (frac < Rational(1, 2)) {
      open.push_back(std::move(up));
      open.push_back(std::move(down));
    } else {
      open.push_back(std::move(down));
      open.push_back(std::move(up));
    }
  }

  if (unbounded) {
    Solution out;
    out.status = SolveStatus::Unbounded;
    out.nodes = nodes;
    out.pivots = pivots;
    return out;
  }
  best.nodes = nodes;
  best.pivots = pivots;
  best.duals.clear();
  return best;
}

}  // namespace pssr
