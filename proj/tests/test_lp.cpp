#include <doctest.h>

#include <random>
#include <sstream>

#include "pssr/errors.hpp"
#include "pssr/lp.hpp"

using namespace pssr;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

void require_certified(const ConstraintProgram& p, const Solution& s) {
  REQUIRE(s.optimal());
  CHECK(p.violations(s.values, false).empty());
  const auto issues = verify_dual_certificate(p, s);
  for (const auto& m : issues) INFO(m);
  CHECK(issues.empty());
}

// Exhaustive search over the integer box [lower, upper] of every variable.
std::optional<Rational> lattice_optimum(const ConstraintProgram& p) {
  const int n = p.variable_count();
  std::vector<Rational> x(static_cast<std::size_t>(n));
  std::vector<long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n)), cur(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    lo[j] = to_long(ceil(p.variable(j).lower));
    hi[j] = to_long(floor(*p.variable(j).upper));
    cur[j] = lo[j];
    if (hi[j] < lo[j]) return std::nullopt;
  }
  std::optional<Rational> best;
  while (true) {
    for (int j = 0; j < n; ++j) x[j] = cur[j];
    if (p.violations(x).empty()) {
      const Rational v = p.objective_value(x);
      const bool better = !best || (p.sense() == Sense::Minimize ? v < *best : v > *best);
      if (better) best = v;
    }
    int j = 0;
    while (j < n && cur[j] == hi[j]) cur[j] = lo[j], ++j;
    if (j == n) break;
    ++cur[j];
  }
  return best;
}

}  // namespace

TEST_CASE("lp: single lower bound") {
  ConstraintProgram p;
  const int x = p.add_variable("x");
  p.add_constraint({{x, q(1)}}, Relation::GreaterEqual, q(3, 2));
  p.set_objective({{x, q(1)}}, Sense::Minimize);
  const auto s = solve_lp(p);
  require_certified(p, s);
  CHECK(s.objective == q(3, 2));
}

TEST_CASE("lp: two-constraint vertex") {
  ConstraintProgram p;
  const int x = p.add_variable("x");
  const int y = p.add_variable("y");
  p.add_constraint({{x, q(1)}, {y, q(2)}}, Relation::GreaterEqual, q(2));
  p.add_constraint({{x, q(2)}, {y, q(1)}}, Relation::GreaterEqual, q(2));
  p.set_objective({{x, q(1)}, {y, q(1)}}, Sense::Minimize);
  const auto s = solve_lp(p);
  require_certified(p, s);
  CHECK(s.objective == q(4, 3));
  CHECK(s.values[0] == q(2, 3));
  CHECK(s.values[1] == q(2, 3));
}

TEST_CASE("lp: infeasible and unbounded") {
  ConstraintProgram p;
  const int x = p.add_variable("x");
  p.add_constraint({{x, q(1)}}, Relation::LessEqual, q(-1));
  p.set_objective({{x, q(1)}}, Sense::Minimize);
  CHECK(solve_lp(p).status == SolveStatus::Infeasible);

  ConstraintProgram u;
  const int a = u.add_variable("a");
  const int b = u.add_variable("b");
  u.add_constraint({{a, q(1)}, {b, q(-1)}}, Relation::LessEqual, q(1));
  u.set_objective({{a, q(1)}, {b, q(1)}}, Sense::Maximize);
  CHECK(solve_lp(u).status == SolveStatus::Unbounded);
}

TEST_CASE("lp: malformed programs are rejected") {
  ConstraintProgram p;
  p.add_variable("x");
  CHECK_THROWS_AS(p.add_constraint({{3, q(1)}}, Relation::LessEqual, q(1)), InvalidInput);
  CHECK_THROWS_AS(solve_lp(p), InvalidInput);
}

TEST_CASE("lp: rows are merged and zero terms dropped") {
  ConstraintProgram p;
  const int x = p.add_variable("x");
  const int y = p.add_variable("y");
  p.add_constraint({{y, q(1)}, {x, q(2)}, {y, q(-1)}, {x, q(1)}}, Relation::LessEqual, q(3));
  REQUIRE(p.constraints()[0].row.size() == 1);
  CHECK(p.constraints()[0].row[0].var == x);
  CHECK(p.constraints()[0].row[0].coef == q(3));
}

TEST_CASE("lp: maximize with equalities, bounds and certificate") {
  ConstraintProgram p;
  const int x = p.add_variable("x", false, q(1), q(4));
  const int y = p.add_variable("y");
  const int z = p.add_variable("z", false, q(0), q(5, 2));
  p.add_constraint({{x, q(1)}, {y, q(1)}, {z, q(1)}}, Relation::Equal, q(6));
  p.add_constraint({{x, q(1)}, {y, q(-2)}}, Relation::GreaterEqual, q(-3));
  p.add_constraint({{y, q(1, 3)}, {z, q(1)}}, Relation::LessEqual, q(3));
  p.set_objective({{x, q(2)}, {y, q(3)}, {z, q(-1)}}, Sense::Maximize);
  const auto s = solve_lp(p);
  require_certified(p, s);
  // Vertex enumeration by hand: z = 0, x + y = 6, x - 2y = -3 gives x = 3, y = 3
  // with value 15; x = 4, y = 2 gives 14.
  CHECK(s.objective == q(15));
}

TEST_CASE("lp: fixed variables and redundant equalities") {
  ConstraintProgram p;
  const int x = p.add_variable("x");
  const int y = p.add_variable("y");
  p.fix_variable(x, q(2));
  p.add_constraint({{x, q(1)}, {y, q(1)}}, Relation::Equal, q(5));
  p.add_constraint({{x, q(2)}, {y, q(2)}}, Relation::Equal, q(10));
  p.set_objective({{y, q(1)}}, Sense::Minimize);
  const auto s = solve_lp(p);
  require_certified(p, s);
  CHECK(s.values[1] == q(3));
}

TEST_CASE("lp: degenerate cycling example terminates") {
  // Classic program on which the largest-coefficient rule cycles.
  for (int limit : {1, 5, 20, 1000}) {
    ConstraintProgram p;
    std::vector<int> v;
    for (int i = 0; i < 4; ++i) v.push_back(p.add_variable("x" + std::to_string(i + 4)));
    p.add_constraint({{v[0], q(1, 4)}, {v[1], q(-8)}, {v[2], q(-1)}, {v[3], q(9)}}, Relation::LessEqual, q(0));
    p.add_constraint({{v[0], q(1, 2)}, {v[1], q(-12)}, {v[2], q(-1, 2)}, {v[3], q(3)}}, Relation::LessEqual, q(0));
    p.add_constraint({{v[2], q(1)}}, Relation::LessEqual, q(1));
    p.set_objective({{v[0], q(-3, 4)}, {v[1], q(20)}, {v[2], q(-1, 2)}, {v[3], q(6)}}, Sense::Minimize);
    SolveOptions opt;
    opt.degenerate_streak_limit = limit;
    opt.max_pivots = 10000;
    const auto s = solve_lp(p, opt);
    require_certified(p, s);
    CHECK(s.objective == q(-5, 4));
  }
}

TEST_CASE("lp: random programs carry dual certificates") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> coef(-4, 6), nvar(2, 6), ncon(1, 6), den(1, 3);
  int optimal = 0;
  for (int trial = 0; trial < 200; ++trial) {
    ConstraintProgram p;
    const int n = nvar(rng);
    for (int j = 0; j < n; ++j) p.add_variable("x" + std::to_string(j), false, q(0), q(10));
    const int m = ncon(rng);
    for (int i = 0; i < m; ++i) {
      Row r;
      for (int j = 0; j < n; ++j) r.push_back({j, q(coef(rng), den(rng))});
      const auto rel = static_cast<Relation>(trial % 3 == 0 ? 1 : (i % 2 == 0 ? 0 : 2));
      p.add_constraint(r, rel, q(coef(rng) * 3, den(rng)));
    }
    Row obj;
    for (int j = 0; j < n; ++j) obj.push_back({j, q(coef(rng), den(rng))});
    if (obj.size() == 0) continue;
    p.set_objective(obj, trial % 2 ? Sense::Maximize : Sense::Minimize);
    Solution s;
    try {
      s = solve_lp(p);
    } catch (const InvalidInput&) {
      continue;  // all-zero objective
    }
    if (s.status == SolveStatus::Infeasible) continue;
    require_certified(p, s);
    ++optimal;
  }
  CHECK(optimal > 50);
}

TEST_CASE("lp: floating-point guidance never changes the exact answer") {
  std::mt19937 rng(19);
  std::uniform_int_distribution<int> coef(-3, 5), nvar(3, 9), ncon(2, 9), den(1, 4);
  SolveOptions exact_only;
  exact_only.float_guide = false;
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    ConstraintProgram p;
    const int n = nvar(rng);
    for (int j = 0; j < n; ++j) p.add_variable("x" + std::to_string(j), false, q(0), trial % 4 ? std::optional<Rational>(q(7)) : std::nullopt);
    const int m = ncon(rng);
    for (int i = 0; i < m; ++i) {
      Row r;
      for (int j = 0; j < n; ++j) {
        if (rng() % 3) r.push_back({j, q(coef(rng), den(rng))});
      }
      p.add_constraint(r, static_cast<Relation>(rng() % 3), q(coef(rng) * 2, den(rng)));
    }
    Row obj;
    for (int j = 0; j < n; ++j) obj.push_back({j, q(coef(rng) + 1, den(rng))});
    p.set_objective(obj, trial % 2 ? Sense::Maximize : Sense::Minimize);
    Solution guided, plain;
    try {
      guided = solve_lp(p);
      plain = solve_lp(p, exact_only);
    } catch (const InvalidInput&) {
      continue;
    }
    REQUIRE(guided.status == plain.status);
    if (!guided.optimal()) continue;
    CHECK(guided.objective == plain.objective);
    require_certified(p, guided);
    ++compared;
  }
  CHECK(compared > 60);
}

TEST_CASE("ilp: rounding up a single bound") {
  ConstraintProgram p;
  const int x = p.add_variable("x", true);
  p.add_constraint({{x, q(1)}}, Relation::GreaterEqual, q(3, 2));
  p.set_objective({{x, q(1)}}, Sense::Minimize);
  const auto s = solve_ilp(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == q(2));
}

TEST_CASE("ilp: lattice point example") {
  ConstraintProgram p;
  const int x = p.add_variable("x", true);
  const int y = p.add_variable("y", true);
  p.add_constraint({{x, q(1)}, {y, q(1)}}, Relation::GreaterEqual, q(5, 2));
  p.set_objective({{x, q(2)}, {y, q(3)}}, Sense::Minimize);
  const auto s = solve_ilp(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == q(6));
  CHECK(s.values[0] == q(3));
  CHECK(s.values[1] == q(0));
}

TEST_CASE("ilp: integrality makes the system infeasible") {
  ConstraintProgram p;
  const int x = p.add_variable("x", true, q(0), q(1));
  p.add_constraint({{x, q(1)}}, Relation::Equal, q(1, 2));
  p.set_objective({{x, q(1)}}, Sense::Minimize);
  CHECK(solve_ilp(p).status == SolveStatus::Infeasible);
}

TEST_CASE("ilp: budget exhaustion is reported with a bound") {
  // Parity-style knapsack needing many nodes.
  ConstraintProgram p;
  Row r, obj;
  for (int j = 0; j < 12; ++j) {
    const int v = p.add_variable("x" + std::to_string(j), true, q(0), q(1));
    r.push_back({v, q(2)});
    obj.push_back({v, q(1)});
  }
  p.add_constraint(r, Relation::Equal, q(13));
  p.set_objective(obj, Sense::Minimize);
  SolveOptions opt;
  opt.max_nodes = 5;
  const auto s = solve_ilp(p, opt);
  CHECK(s.status == SolveStatus::BudgetExceeded);
  REQUIRE(s.best_bound.has_value());
  CHECK(*s.best_bound <= q(13, 2));
}

TEST_CASE("ilp: seeded incumbent must be feasible and is kept if optimal") {
  ConstraintProgram p;
  const int x = p.add_variable("x", true, q(0), q(5));
  const int y = p.add_variable("y", true, q(0), q(5));
  p.add_constraint({{x, q(1)}, {y, q(1)}}, Relation::Equal, q(4));
  p.set_objective({{x, q(1)}}, Sense::Maximize);
  SolveOptions bad;
  bad.incumbent = std::vector<Rational>{q(1), q(1)};
  CHECK_THROWS_AS(solve_ilp(p, bad), InvalidInput);
  SolveOptions good;
  good.incumbent = std::vector<Rational>{q(4), q(0)};
  const auto s = solve_ilp(p, good);
  REQUIRE(s.optimal());
  CHECK(s.objective == q(4));
}

TEST_CASE("ilp: agrees with lattice enumeration on random tiny programs") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> coef(-3, 5), den(1, 3), nvar(1, 6), ncon(1, 4);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    ConstraintProgram p;
    const int n = nvar(rng);
    const int cap = n <= 3 ? 8 : (n == 4 ? 6 : 3);
    std::uniform_int_distribution<int> ub(0, cap);
    for (int j = 0; j < n; ++j) p.add_variable("x" + std::to_string(j), true, q(0), q(ub(rng)));
    const int m = ncon(rng);
    for (int i = 0; i < m; ++i) {
      Row r;
      for (int j = 0; j < n; ++j) r.push_back({j, q(coef(rng), den(rng))});
      const Relation rel = i == 0 && trial % 4 == 0 ? Relation::Equal : (i % 2 ? Relation::GreaterEqual : Relation::LessEqual);
      p.add_constraint(r, rel, q(coef(rng) * 2, den(rng)));
    }
    Row obj;
    for (int j = 0; j < n; ++j) obj.push_back({j, q(coef(rng))});
    obj.push_back({0, q(1)});
    p.set_objective(obj, trial % 2 ? Sense::Maximize : Sense::Minimize);
    if (p.objective().empty()) continue;
    const auto expected = lattice_optimum(p);
    const auto s = solve_ilp(p);
    if (!expected) {
      CHECK(s.status == SolveStatus::Infeasible);
      continue;
    }
    ++feasible;
    REQUIRE(s.optimal());
    CHECK(p.violations(s.values).empty());
    CHECK(s.objective == *expected);
  }
  CHECK(feasible > 100);
}

TEST_CASE("lift to integral") {
  auto l = lift_to_integral({q(1, 8), q(3, 8), q(1, 4)});
  CHECK(l.multiplier == 8);
  CHECK(l.values == std::vector<BigInt>{1, 3, 2});
  auto id = lift_to_integral({q(2), q(0), q(7)});
  CHECK(id.multiplier == 1);
  CHECK(to_string(q(4, 2)) == "2/1");
  CHECK(parse_rational("-6/8") == q(-3, 4));
  CHECK_THROWS_AS(parse_rational("1/0"), InvalidInput);
  CHECK_THROWS_AS(parse_rational("x"), InvalidInput);
}

TEST_CASE("lp format export uses integer coefficients") {
  ConstraintProgram p;
  const int x = p.add_variable("x(1)", true);
  const int y = p.add_variable("y");
  p.add_constraint({{x, q(1, 2)}, {y, q(2, 3)}}, Relation::LessEqual, q(5, 6), "row one");
  p.set_objective({{x, q(1)}, {y, q(-1)}}, Sense::Maximize);
  std::ostringstream os;
  write_lp_format(os, p);
  const std::string text = os.str();
  CHECK(text.find("Maximize") == 0);
  CHECK(text.find("row_one: 3 x_1_ + 4 y <= 5") != std::string::npos);
  CHECK(text.find("General\n x_1_") != std::string::npos);
}
