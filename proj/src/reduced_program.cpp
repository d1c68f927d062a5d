#include "pssr/reduced_program.hpp"

#include "pssr/core.hpp"
#include "pssr/errors.hpp"

namespace pssr {

namespace {

Rational c(int n, int k) { return Rational(static_cast<unsigned long>(binomial(n, k))); }

void check_params(int n, int k, int d) {
  if (n < 2 || k < 3 || d < 2 || d > k - 1) {
    throw InvalidInput("reduced program needs N >= 2, K >= 3 and 2 <= D <= K-1");
  }
}

}  // namespace

ReducedProgram build_reduced_full_family_program(int n, int k, int d) {
  check_params(n, k, d);
  ReducedProgram rp;
  auto& p = rp.program;
  auto& ix = rp.index;
  const int kd = k - d;
  for (int u = 1; u <= k; ++u) ix.t[u] = p.add_variable("T" + std::to_string(u));
  for (int v = 1; v <= d; ++v) {
    for (int u1 = 1; u1 <= kd; ++u1) {
      for (int u2 = 0; u2 <= d - v; ++u2) {
        ix.i[{u1, u2, v}] =
            p.add_variable("I" + std::to_string(u1) + "_" + std::to_string(u2) + "_" + std::to_string(v));
      }
    }
  }
  for (int v = 2; v <= d; ++v) {
    for (int r = v; r <= d; ++r) ix.j[{v, r}] = p.add_variable("J" + std::to_string(v) + "_" + std::to_string(r));
  }
  ix.l = p.add_variable("L", false, Rational(1));
  p.fix_variable(ix.l, Rational(1));

  auto T = [&](int u) { return ix.t.at(u); };
  auto I = [&](int u1, int u2, int v) { return ix.i.at({u1, u2, v}); };
  auto J = [&](int v, int r) { return ix.j.at({v, r}); };
  const Rational nm1(n - 1);

  // Side/target budget per support shape (u1 interference, u2 demand).
  for (int u1 = 1; u1 <= kd; ++u1) {
    for (int u2 = 0; u2 <= d; ++u2) {
      Row r;
      for (int v = 1; v <= d - u2; ++v) r.push_back({I(u1, u2, v), c(d - u2, v)});
      for (int v = 1; v <= u2; ++v) r.push_back({I(u1, u2 - v, v), nm1 * c(u2, v)});
      r.push_back({T(u1 + u2), Rational(-1)});
      p.add_constraint(r, Relation::LessEqual, Rational(0),
                       "budget_" + std::to_string(u1) + "_" + std::to_string(u2));
      ++rp.side_target_rows;
    }
  }

  // Quota.
  {
    Row r{{T(1), Rational(1)}};
    for (int u1 = 1; u1 <= kd; ++u1) {
      for (int u2 = 0; u2 < d; ++u2) r.push_back({I(u1, u2, 1), nm1 * c(kd, u1) * c(d - 1, u2)});
    }
    for (int v = 2; v <= d; ++v) {
      for (int r2 = v; r2 <= d; ++r2) r.push_back({J(v, r2), c(d - 1, v - 1)});
    }
    r.push_back({ix.l, Rational(-1, n)});
    p.add_constraint(r, Relation::Equal, Rational(0), "quota");
  }

  // Availability per demand-only support size.
  for (int v = 2; v <= d; ++v) {
    Row r{{T(v), Rational(1)}};
    for (int u1 = 1; u1 <= kd; ++u1) {
      for (int u2 = 0; u2 <= d - v; ++u2) r.push_back({I(u1, u2, v), nm1 * c(kd, u1) * c(d - v, u2)});
    }
    for (int r2 = v; r2 <= d; ++r2) r.push_back({J(v, r2), Rational(-v)});
    p.add_constraint(r, Relation::GreaterEqual, Rational(0), "avail_" + std::to_string(v));
  }

  // Round m availability.
  for (int m = 1; m < d; ++m) {
    Row r{{T(1), nm1}};
    for (int r2 = 1; r2 <= m; ++r2) {
      for (int u1 = 1; u1 <= kd; ++u1) r.push_back({I(u1, r2 - 1, 1), nm1 * nm1 * c(kd, u1) * c(d - 1, r2 - 1)});
    }
    for (int r2 = 2; r2 <= m; ++r2) {
      for (int v = 1; v < r2; ++v) r.push_back({J(v + 1, r2), nm1 * c(d - 1, v)});
    }
    for (int r2 = 2; r2 <= m + 1; ++r2) {
      for (int v = 1; v < r2; ++v) {
        for (int u1 = 1; u1 <= kd; ++u1) {
          r.push_back({I(u1, r2 - v, v), Rational(-n) * c(kd, u1) * c(d - 1, v) * c(d - v - 1, r2 - v - 1)});
        }
        r.push_back({J(v + 1, r2), Rational(-v) * c(d - 1, v)});
      }
    }
    p.add_constraint(r, Relation::GreaterEqual, Rational(0), "round_" + std::to_string(m));
  }

  // Per-message reuse.
  {
    Row r;
    for (int u = 1; u <= k; ++u) r.push_back({T(u), c(k - 1, u - 1)});
    r.push_back({ix.l, Rational(-1)});
    p.add_constraint(r, Relation::LessEqual, Rational(0), "reuse");
  }

  Row obj;
  for (int u = 1; u <= k; ++u) obj.push_back({T(u), c(k, u)});
  p.set_objective(obj, Sense::Minimize);
  return rp;
}

ReducedProgram build_mpir_restricted_program(int n, int k, int d) {
  ReducedProgram rp = build_reduced_full_family_program(n, k, d);
  auto& p = rp.program;
  const auto& ix = rp.index;
  const int kd = k - d;
  for (const auto& [key, var] : ix.i) {
    if (std::get<1>(key) >= 1) p.add_constraint({{var, Rational(1)}}, Relation::Equal, Rational(0), "no_shared");
  }
  for (int u1 = 1; u1 <= kd; ++u1) {
    for (int v = 1; v <= d; ++v) {
      p.add_constraint({{ix.i.at({u1, 0, v}), Rational(n - 1)}, {ix.t.at(u1 + v), Rational(-1)}}, Relation::Equal,
                       Rational(0), "pair_all_" + std::to_string(u1) + "_" + std::to_string(v));
    }
  }
  for (int v = 2; v <= d; ++v) {
    for (int r = v + 1; r <= d; ++r) {
      p.add_constraint({{ix.j.at({v, r}), Rational(1)}}, Relation::Equal, Rational(0), "own_round");
    }
    Row r{{ix.j.at({v, v}), Rational(v)}};
    for (int i = 0; i <= kd; ++i) r.push_back({ix.t.at(v + i), Rational(-1) * c(kd, i)});
    p.add_constraint(r, Relation::Equal, Rational(0), "use_all_" + std::to_string(v));
  }
  return rp;
}

ReducedResult solve_reduced(const ReducedProgram& rp, int servers, int demand_size, const SolveOptions& options) {
  ReducedResult out;
  out.solution = solve_lp(rp.program, options);
  if (out.solution.status == SolveStatus::BudgetExceeded) throw BudgetExceeded("reduced LP ran out of budget");
  if (!out.solution.optimal()) throw Infeasible("reduced LP reported " + to_string(out.solution.status));
  out.normalized_total = out.solution.objective;
  out.rate = Rational(demand_size) / (Rational(servers) * out.normalized_total);
  return out;
}

}  // namespace pssr
