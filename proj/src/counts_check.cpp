#include <map>

#include "pssr/scheme_program.hpp"

namespace pssr {

namespace {

std::string tag(int j) { return "demand " + std::to_string(j + 1) + ": "; }

}  // namespace

std::vector<std::string> check_scheme_counts(const SchemeCounts& c) {
  std::vector<std::string> bad;
  const DemandInstance& inst = c.instance;
  const std::int64_t n = inst.servers;
  const int d = inst.demand_size;
  const SubsetMask all = SubsetMask::full(inst.messages);

  if (c.l < 1) bad.push_back("L must be positive");
  if (c.l % n != 0) bad.push_back("L = " + std::to_string(c.l) + " is not a multiple of N");

  for (const auto& [u, v] : c.t) {
    if (u.empty() || !u.subset_of(all)) bad.push_back("T has an invalid support " + u.to_string());
    if (v < 0) bad.push_back("T" + u.to_string() + " is negative");
  }
  for (const auto& [key, v] : c.i) {
    if (key.j < 0 || key.j >= inst.family_size()) {
      bad.push_back("I references demand " + std::to_string(key.j + 1));
      continue;
    }
    const SubsetMask w = inst.demand(key.j);
    if (key.v.empty() || !key.v.subset_of(w) || !(key.u & key.v).empty() || key.u.subset_of(w) ||
        !key.u.subset_of(all)) {
      bad.push_back(tag(key.j) + "I has an invalid index U=" + key.u.to_string() + " V=" + key.v.to_string());
    }
    if (v < 0) bad.push_back(tag(key.j) + "negative I");
  }
  for (const auto& [key, v] : c.j) {
    if (key.j < 0 || key.j >= inst.family_size()) {
      bad.push_back("J references demand " + std::to_string(key.j + 1));
      continue;
    }
    const SubsetMask w = inst.demand(key.j);
    if (key.v.size() < 2 || !key.v.subset_of(w) || !key.v.contains(key.message) || key.round < key.v.size() ||
        key.round > d) {
      bad.push_back(tag(key.j) + "J has an invalid index V=" + key.v.to_string());
    }
    if (v < 0) bad.push_back(tag(key.j) + "negative J");
  }
  if (!bad.empty()) return bad;

  for (int j = 0; j < inst.family_size(); ++j) {
    const SubsetMask w = inst.demand(j);
    std::map<SubsetMask, std::int64_t> budget_use;      // per support U ⊄ W_j
    std::map<SubsetMask, std::int64_t> pair_supply;     // per demand part V
    std::map<SubsetMask, std::int64_t> recovery_use;    // per demand-only support V
    std::map<int, std::int64_t> quota;                  // per demand message
    for (const auto& [key, v] : c.i) {
      if (key.j != j) continue;
      budget_use[key.u] += v;
      budget_use[key.u | key.v] += (n - 1) * v;
      pair_supply[key.v] += (n - 1) * v;
      if (key.v.size() == 1) quota[key.v.members()[0]] += (n - 1) * v;
    }
    for (const auto& [key, v] : c.j) {
      if (key.j != j) continue;
      recovery_use[key.v] += v;
      quota[key.message] += v;
    }

    for (const auto& [u, used] : budget_use) {
      if (used > c.t_of(u)) {
        bad.push_back(tag(j) + "support " + u.to_string() + " used " + std::to_string(used) + " times but only " +
                      std::to_string(c.t_of(u)) + " symbols exist");
      }
    }
    for (int i : w.members()) {
      const std::int64_t got = quota[i] + c.t_of(SubsetMask::single(i));
      if (got * n != c.l) {
        bad.push_back(tag(j) + "message " + std::to_string(i + 1) + " recovers " + std::to_string(got) +
                      " subpackets per server, need L/N");
      }
    }
    for_each_submask(w, [&](SubsetMask v) {
      if (v.size() < 2) return;
      const std::int64_t have = c.t_of(v) + pair_supply[v];
      if (have < recovery_use[v]) {
        bad.push_back(tag(j) + "demand-only support " + v.to_string() + " supplies " + std::to_string(have) +
                      " symbols but " + std::to_string(recovery_use[v]) + " are used");
      }
    });

    // Rounds: indices of i recovered by round m from other servers must cover
    // indices of i consumed by symbols decoded up to round m+1.
    for (int i : w.members()) {
      for (int m = 1; m < d; ++m) {
        std::int64_t supply = (n - 1) * c.t_of(SubsetMask::single(i));
        std::int64_t demand = 0;
        for (const auto& [key, v] : c.i) {
          if (key.j != j) continue;
          if (key.v == SubsetMask::single(i) && (key.u & w).size() <= m - 1) supply += (n - 1) * (n - 1) * v;
          if (key.u.contains(i) && (key.u & w).size() + key.v.size() <= m + 1) demand += n * v;
        }
        for (const auto& [key, v] : c.j) {
          if (key.j != j || !key.v.contains(i)) continue;
          if (key.message == i && key.round <= m) supply += (n - 1) * v;
          if (key.message != i && key.round <= m + 1) demand += v;
        }
        if (supply < demand) {
          bad.push_back(tag(j) + "round " + std::to_string(m) + ", message " + std::to_string(i + 1) + ": " +
                        std::to_string(supply) + " recovered indices for " + std::to_string(demand) + " uses");
        }
      }
    }
  }

  for (int i = 0; i < inst.messages; ++i) {
    std::int64_t s = 0;
    for (const auto& [u, v] : c.t) {
      if (u.contains(i)) s += v;
    }
    if (s > c.l) {
      bad.push_back("message " + std::to_string(i + 1) + " appears in " + std::to_string(s) +
                    " symbols per server, more than L");
    }
  }
  return bad;
}

}  // namespace pssr
