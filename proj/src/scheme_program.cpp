#include "pssr/scheme_program.hpp"

#include <algorithm>
#include <numeric>

#include "pssr/converse.hpp"
#include "pssr/errors.hpp"
#include "simplex.hpp"

namespace pssr {

// ---------------------------------------------------------------------------
// Indexing and counts

int VariableIndexing::t_var(SubsetMask u) const {
  auto it = t.find(u);
  if (it == t.end()) throw InvalidInput("no T variable for support " + u.to_string());
  return it->second;
}

int VariableIndexing::i_var(const PairKey& key) const {
  auto it = i.find(key);
  if (it == i.end()) {
    throw InvalidInput("no I variable for j=" + std::to_string(key.j + 1) + " U=" + key.u.to_string() +
                       " V=" + key.v.to_string());
  }
  return it->second;
}

int VariableIndexing::j_var(const RecoveryKey& key) const {
  auto it = j.find(key);
  if (it == j.end()) {
    throw InvalidInput("no J variable for j=" + std::to_string(key.j + 1) + " V=" + key.v.to_string() +
                       " i=" + std::to_string(key.message + 1) + " k=" + std::to_string(key.round));
  }
  return it->second;
}

namespace {

template <class Map, class Key>
std::int64_t lookup(const Map& m, const Key& k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

std::int64_t SchemeCounts::t_of(SubsetMask u) const { return lookup(t, u); }
std::int64_t SchemeCounts::i_of(const PairKey& key) const { return lookup(i, key); }
std::int64_t SchemeCounts::j_of(const RecoveryKey& key) const { return lookup(j, key); }

std::int64_t SchemeCounts::t_total() const {
  std::int64_t s = 0;
  for (const auto& [u, c] : t) s += c;
  return s;
}

Rational SchemeCounts::rate() const {
  const std::int64_t total = t_total();
  if (total <= 0) throw InvalidInput("scheme downloads nothing");
  return make_rational(BigInt(instance.demand_size) * BigInt(static_cast<long>(l)),
                       BigInt(instance.servers) * BigInt(static_cast<long>(total)));
}

SchemeCounts naive_counts(const DemandInstance& inst) {
  SchemeCounts c;
  c.instance = inst;
  c.l = inst.servers;
  SubsetMask uni;
  for (const auto& w : inst.family) uni = uni | w;
  for (int m : uni.members()) c.t[SubsetMask::single(m)] = 1;
  return c;
}

ProgramStats expected_program_stats(const DemandInstance& inst) {
  const std::size_t k = static_cast<std::size_t>(inst.messages);
  const std::size_t d = static_cast<std::size_t>(inst.demand_size);
  const std::size_t e = static_cast<std::size_t>(inst.family_size());
  std::size_t pow3 = 1;
  for (std::size_t x = 0; x < d; ++x) pow3 *= 3;
  ProgramStats s;
  s.t_vars = (std::size_t{1} << k) - 1;
  s.i_vars = e * ((std::size_t{1} << (k - d)) - 1) * (pow3 - (std::size_t{1} << d));
  s.j_vars = e * d * ((d + 1) * (std::size_t{1} << (d - 2)) - d);
  s.side_target_rows = e * ((std::size_t{1} << k) - (std::size_t{1} << d));
  s.quota_rows = e * d;
  s.availability_rows = e * ((std::size_t{1} << d) - d - 1);
  s.round_rows = e * d * (d - 1);
  s.reuse_rows = k;
  return s;
}

// ---------------------------------------------------------------------------
// General program

GeneralProgram build_general_program(const DemandInstance& inst, ProgramScaling scaling, int message_cap,
                                     ProgramStats* stats) {
  inst.validate(message_cap);
  if (!inst.is_normalized()) throw InvalidInput("program requires a normalized instance");
  const int n = inst.servers;
  const int k_msgs = inst.messages;
  const int d = inst.demand_size;
  const bool integral = scaling == ProgramScaling::Integral;
  const SubsetMask all = SubsetMask::full(k_msgs);

  GeneralProgram gp;
  auto& p = gp.program;
  auto& ix = gp.index;
  ProgramStats st;

  for (std::uint32_t b = 1; b <= all.bits(); ++b) {
    const SubsetMask u(b);
    ix.t[u] = p.add_variable("T" + u.to_string(), integral);
  }
  st.t_vars = ix.t.size();
  for (int j = 0; j < inst.family_size(); ++j) {
    const SubsetMask w = inst.demand(j);
    for_each_submask(w, [&](SubsetMask v) {
      if (v.empty()) return;
      for (SubsetMask u : enum_U_all(inst, j, v)) {
        ix.i[PairKey{j, u, v}] = p.add_variable(
            "I" + std::to_string(j + 1) + "_" + u.to_string() + "_" + v.to_string(), integral);
      }
    });
    for_each_submask(w, [&](SubsetMask v) {
      if (v.size() < 2) return;
      for (int i : v.members()) {
        for (int k = v.size(); k <= d; ++k) {
          ix.j[RecoveryKey{j, v, i, k}] = p.add_variable("J" + std::to_string(j + 1) + "_" + v.to_string() + "_" +
                                                             std::to_string(i + 1) + "_" + std::to_string(k),
                                                         integral);
        }
      }
    });
  }
  st.i_vars = ix.i.size();
  st.j_vars = ix.j.size();
  ix.l = p.add_variable("L", integral, Rational(1));
  if (!integral) p.fix_variable(ix.l, Rational(1));

  auto I = [&](int j, SubsetMask u, SubsetMask v) { return ix.i_var(PairKey{j, u, v}); };
  auto J = [&](int j, SubsetMask v, int i, int k) { return ix.j_var(RecoveryKey{j, v, i, k}); };
  auto T = [&](SubsetMask u) { return ix.t_var(u); };
  const Rational nm1(n - 1);

  for (int j = 0; j < inst.family_size(); ++j) {
    const SubsetMask w = inst.demand(j);
    const std::string tag = "w" + std::to_string(j + 1);

    // Side/target budget per support not inside W_j.
    for (std::uint32_t b = 1; b <= all.bits(); ++b) {
      const SubsetMask u(b);
      if (u.subset_of(w)) continue;
      Row r;
      for_each_submask(w - u, [&](SubsetMask v) {
        if (!v.empty()) r.push_back({I(j, u, v), Rational(1)});
      });
      for_each_submask(w & u, [&](SubsetMask v) {
        if (!v.empty()) r.push_back({I(j, u - v, v), nm1});
      });
      r.push_back({T(u), Rational(-1)});
      p.add_constraint(r, Relation::LessEqual, Rational(0), tag + "_budget" + u.to_string());
      ++st.side_target_rows;
    }

    for (int i : w.members()) {
      const SubsetMask si = SubsetMask::single(i);

      // Quota: exactly L/N subpackets of message i from each server.
      Row quota{{T(si), Rational(n)}};
      for (SubsetMask u : enum_U_all(inst, j, si)) quota.push_back({I(j, u, si), Rational(n * (n - 1))});
      for (int k = 2; k <= d; ++k) {
        for (int l = 1; l < k; ++l) {
          for (SubsetMask v : enum_V(inst, j, si, l)) quota.push_back({J(j, v | si, i, k), Rational(n)});
        }
      }
      quota.push_back({ix.l, Rational(-1)});
      p.add_constraint(quota, Relation::Equal, Rational(0), tag + "_quota" + si.to_string());
      ++st.quota_rows;

      // Round m: indices of message i recovered so far cover those consumed.
      for (int m = 1; m < d; ++m) {
        Row r{{T(si), nm1}};
        for (int k = 1; k <= m; ++k) {
          for (SubsetMask u : enum_U(inst, j, si, k - 1)) r.push_back({I(j, u, si), nm1 * nm1});
        }
        for (int k = 2; k <= m; ++k) {
          for (int l = 1; l < k; ++l) {
            for (SubsetMask v : enum_V(inst, j, si, l)) r.push_back({J(j, v | si, i, k), nm1});
          }
        }
        for (int k = 2; k <= m + 1; ++k) {
          for (int l = 1; l < k; ++l) {
            for (SubsetMask v : enum_V(inst, j, si, l)) {
              for (SubsetMask u : enum_U(inst, j, v | si, k - 1 - l)) {
                r.push_back({I(j, u | si, v), Rational(-n)});
              }
              for (int i2 : v.members()) r.push_back({J(j, v | si, i2, k), Rational(-1)});
            }
          }
        }
        p.add_constraint(r, Relation::GreaterEqual, Rational(0),
                         tag + "_round" + std::to_string(m) + si.to_string());
        ++st.round_rows;
      }
    }

    // Demand-only supports of size >= 2 cover their recovery uses.
    for_each_submask(w, [&](SubsetMask v) {
      if (v.size() < 2) return;
      Row r{{T(v), Rational(1)}};
      for (SubsetMask u : enum_U_all(inst, j, v)) r.push_back({I(j, u, v), nm1});
      for (int k = v.size(); k <= d; ++k) {
        for (int i : v.members()) r.push_back({J(j, v, i, k), Rational(-1)});
      }
      p.add_constraint(r, Relation::GreaterEqual, Rational(0), tag + "_avail" + v.to_string());
      ++st.availability_rows;
    });
  }

  // Each message contributes at most L distinct subpackets per server.
  for (int i = 0; i < k_msgs; ++i) {
    Row r;
    for (const auto& [u, var] : ix.t) {
      if (u.contains(i)) r.push_back({var, Rational(1)});
    }
    r.push_back({ix.l, Rational(-1)});
    p.add_constraint(r, Relation::LessEqual, Rational(0), "reuse" + std::to_string(i + 1));
    ++st.reuse_rows;
  }

  Row obj;
  for (const auto& [u, var] : ix.t) obj.push_back({var, Rational(1)});
  p.set_objective(obj, Sense::Minimize);
  if (stats) *stats = st;
  return gp;
}

std::vector<Rational> counts_to_values(const GeneralProgram& gp, const SchemeCounts& counts) {
  std::vector<Rational> x(static_cast<std::size_t>(gp.program.variable_count()), Rational(0));
  for (const auto& [u, c] : counts.t) x.at(static_cast<std::size_t>(gp.index.t_var(u))) = c;
  for (const auto& [key, c] : counts.i) x.at(static_cast<std::size_t>(gp.index.i_var(key))) = c;
  for (const auto& [key, c] : counts.j) x.at(static_cast<std::size_t>(gp.index.j_var(key))) = c;
  x.at(static_cast<std::size_t>(gp.index.l)) = counts.l;
  return x;
}

namespace {

std::int64_t to_count(const Rational& v, const std::string& what) {
  if (!is_integer(v)) throw InvalidInput(what + " is not integral: " + to_string(v));
  return to_long(v.get_num());
}

}  // namespace

SchemeCounts counts_from_values(const DemandInstance& inst, const VariableIndexing& index,
                                const std::vector<Rational>& values) {
  SchemeCounts c;
  c.instance = inst;
  c.l = to_count(values.at(static_cast<std::size_t>(index.l)), "L");
  for (const auto& [u, var] : index.t) {
    const auto v = to_count(values.at(static_cast<std::size_t>(var)), "T");
    if (v != 0) c.t[u] = v;
  }
  for (const auto& [key, var] : index.i) {
    const auto v = to_count(values.at(static_cast<std::size_t>(var)), "I");
    if (v != 0) c.i[key] = v;
  }
  for (const auto& [key, var] : index.j) {
    const auto v = to_count(values.at(static_cast<std::size_t>(var)), "J");
    if (v != 0) c.j[key] = v;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Optimization stages

namespace {

void require_valid(const SchemeCounts& counts, const std::string& stage) {
  const auto issues = check_scheme_counts(counts);
  if (!issues.empty()) throw Error(stage + " produced an invalid scheme: " + issues.front());
}

}  // namespace

RateResult maximize_rate(const DemandInstance& inst, const SolveOptions& options,
                         const std::optional<Rational>& upper_bound) {
  GeneralProgram gp = build_general_program(inst, ProgramScaling::Normalized);
  const Solution s = solve_lp(gp.program, options);
  if (s.status == SolveStatus::BudgetExceeded) throw BudgetExceeded("rate LP ran out of its pivot or time budget");
  if (s.status != SolveStatus::Optimal) {
    throw Infeasible("rate LP reported " + to_string(s.status) + "; the naive scheme is always feasible");
  }
  RateResult r;
  r.pivots = s.pivots;
  r.normalized_total = s.objective;
  r.rate = Rational(inst.demand_size) / (Rational(inst.servers) * s.objective);

  const IntegralLift lift = lift_to_integral(s.values);
  r.lift_multiplier = lift.multiplier;
  const BigInt l = lcm(lift.multiplier, BigInt(inst.servers));
  std::vector<Rational> scaled;
  scaled.reserve(s.values.size());
  for (const auto& v : s.values) scaled.push_back(v * l);
  // The L column is fixed at 1 in the normalized program, so it scales to l.
  r.counts = counts_from_values(inst, gp.index, scaled);
  require_valid(r.counts, "rate stage");

  if (r.counts.rate() != r.rate) throw Error("lifted scheme rate differs from the LP rate");
  if (r.rate < make_rational(inst.demand_size, inst.messages)) {
    throw Error("LP rate " + to_string(r.rate) + " is below the naive rate");
  }
  if (upper_bound && r.rate > *upper_bound) {
    throw Error("LP rate " + to_string(r.rate) + " exceeds the converse bound " + to_string(*upper_bound));
  }
  return r;
}

namespace {

// Integral program with Σ T_U tied to L by the rate.
GeneralProgram rate_pinned_program(const DemandInstance& inst, const Rational& rate) {
  GeneralProgram gp = build_general_program(inst, ProgramScaling::Integral);
  // Σ T_U · N·α = D·β · L
  Row r;
  for (const auto& [u, var] : gp.index.t) r.push_back({var, Rational(BigInt(inst.servers) * rate.get_num())});
  r.push_back({gp.index.l, Rational(-BigInt(inst.demand_size) * rate.get_den())});
  gp.program.add_constraint(r, Relation::Equal, Rational(0), "rate");
  return gp;
}

}  // namespace

SubpacketizationResult minimize_subpacketization(const DemandInstance& inst, const Rational& rate,
                                                 const SchemeCounts& upper, const SolveOptions& options) {
  require_valid(upper, "upper scheme");
  if (upper.rate() != rate) throw InvalidInput("upper scheme does not achieve the requested rate");
  SubpacketizationResult out;
  out.lower_bound = subpacketization_lower_bound(inst.servers, inst.demand_size, rate).value;
  const std::int64_t step = to_long(lcm(out.lower_bound, BigInt(inst.servers)));
  if (upper.l % step != 0) throw InvalidInput("upper scheme L is not a multiple of lcm(L_*, N)");

  GeneralProgram gp = rate_pinned_program(inst, rate);
  const auto deadline = detail::deadline_from(options);
  for (std::int64_t l = step; l <= upper.l; l += step) {
    if (l == upper.l) {
      out.counts = upper;
      out.candidates.push_back(CandidateOutcome{l, SolveStatus::Optimal, 0});
      return out;
    }
    ConstraintProgram p = gp.program;
    p.fix_variable(gp.index.l, Rational(static_cast<long>(l)));
    SolveOptions opt = options;
    if (deadline) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - detail::Clock::now());
      opt.time_limit = std::max(left, std::chrono::milliseconds(1));
    }
    const Solution s = solve_ilp(p, opt);
    out.candidates.push_back(CandidateOutcome{l, s.status, s.nodes});
    if (s.status == SolveStatus::Optimal) {
      out.counts = counts_from_values(inst, gp.index, s.values);
      require_valid(out.counts, "subpacketization stage");
      return out;
    }
    if (s.status == SolveStatus::BudgetExceeded) {
      out.counts = upper;
      out.proven_minimal = false;
      return out;
    }
  }
  throw Error("no candidate up to the lifted L was feasible");
}

SubpacketizationResult minimize_subpacketization_free(const DemandInstance& inst, const Rational& rate,
                                                      const SchemeCounts& upper, const SolveOptions& options) {
  require_valid(upper, "upper scheme");
  SubpacketizationResult out;
  out.lower_bound = subpacketization_lower_bound(inst.servers, inst.demand_size, rate).value;
  GeneralProgram gp = rate_pinned_program(inst, rate);
  gp.program.set_objective({{gp.index.l, Rational(1)}}, Sense::Minimize);
  // L must be a multiple of N.
  const int m = gp.program.add_variable("L_over_N", true, Rational(1));
  gp.program.add_constraint({{gp.index.l, Rational(1)}, {m, Rational(-inst.servers)}}, Relation::Equal, Rational(0),
                            "servers_divide_L");
  SolveOptions opt = options;
  auto seed = counts_to_values(gp, upper);
  seed.at(static_cast<std::size_t>(m)) = Rational(static_cast<long>(upper.l / inst.servers));
  opt.incumbent = seed;
  const Solution s = solve_ilp(gp.program, opt);
  if (s.status == SolveStatus::BudgetExceeded) {
    out.counts = upper;
    out.proven_minimal = false;
    return out;
  }
  if (!s.optimal()) throw Error("free-L program reported " + to_string(s.status));
  std::vector<Rational> vals(s.values.begin(), s.values.end() - 1);
  out.counts = counts_from_values(inst, gp.index, vals);
  out.candidates.push_back(CandidateOutcome{out.counts.l, s.status, s.nodes});
  require_valid(out.counts, "subpacketization stage");
  return out;
}

SchemeCounts complete_recovery_counts(const DemandInstance& inst, const std::map<SubsetMask, std::int64_t>& t,
                                      std::int64_t l, const SolveOptions& options) {
  if (l < 1 || l % inst.servers != 0) throw InvalidInput("L must be a positive multiple of N");
  GeneralProgram gp = build_general_program(inst, ProgramScaling::Integral);
  for (const auto& [u, c] : t) {
    if (c < 0) throw InvalidInput("negative count for support " + u.to_string());
  }
  for (const auto& [u, var] : gp.index.t) {
    auto it = t.find(u);
    gp.program.fix_variable(var, Rational(static_cast<long>(it == t.end() ? 0 : it->second)));
  }
  for (const auto& [u, c] : t) gp.index.t_var(u);
  gp.program.fix_variable(gp.index.l, Rational(static_cast<long>(l)));
  // Fewest pairings and recovery uses among the feasible completions.
  Row obj;
  for (const auto& [key, var] : gp.index.i) obj.push_back({var, Rational(1)});
  for (const auto& [key, var] : gp.index.j) obj.push_back({var, Rational(1)});
  gp.program.set_objective(obj, Sense::Minimize);
  const Solution s = solve_ilp(gp.program, options);
  if (s.status == SolveStatus::BudgetExceeded) throw BudgetExceeded("recovery-count search ran out of budget");
  if (s.status != SolveStatus::Optimal) throw Infeasible("no pairing and recovery counts fit these symbol counts");
  SchemeCounts out = counts_from_values(inst, gp.index, s.values);
  require_valid(out, "recovery-count completion");
  return out;
}

}  // namespace pssr
