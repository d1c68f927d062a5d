#include "pssr/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "pssr/errors.hpp"

namespace pssr {

SubsetMask Symbol::support() const {
  SubsetMask m;
  for (const auto& t : terms) m = m.with(t.message);
  return m;
}

std::map<SubsetMask, std::int64_t> QueryPlan::support_counts(int server) const {
  std::map<SubsetMask, std::int64_t> out;
  for (const auto& s : servers.at(static_cast<std::size_t>(server))) ++out[s.support()];
  return out;
}

std::string to_string(StepKind kind) {
  switch (kind) {
    case StepKind::DirectRead: return "direct-read";
    case StepKind::PairSubtract: return "pair-subtract";
    case StepKind::CancelKnown: return "cancel-known";
  }
  return "?";
}

namespace {

std::string where(int round, int server, SubsetMask support) {
  return "round " + std::to_string(round) + ", server " + std::to_string(server + 1) + ", support " +
         support.to_string();
}

}  // namespace

// ---------------------------------------------------------------------------
// Roster

PairingRoster plan_pairings(const SchemeCounts& counts, int j) {
  const DemandInstance& inst = counts.instance;
  const int n = inst.servers;
  const SubsetMask w = inst.demand(j);
  PairingRoster r;
  r.demand = j;
  r.consumption.assign(static_cast<std::size_t>(n), {});

  for (int i : w.members()) {
    const auto c = counts.t_of(SubsetMask::single(i));
    if (c == 0) continue;
    for (int s = 0; s < n; ++s) r.consumption[static_cast<std::size_t>(s)][SubsetMask::single(i)] += c;
  }

  for (const auto& [key, c] : counts.i) {
    if (key.j != j) continue;
    for (int s = 0; s < n; ++s) {
      for (std::int64_t copy = 0; copy < c; ++copy) {
        PairingInstance p;
        p.u = key.u;
        p.v = key.v;
        p.side_server = s;
        p.natural_round = (key.u & w).size() + key.v.size();
        for (int t = 0; t < n; ++t) {
          if (t == s) continue;
          PairingInstance::Target tg;
          tg.server = t;
          if (key.v.size() == 1) {
            tg.message = key.v.members()[0];
            tg.round = p.natural_round;
          }
          p.targets.push_back(tg);
          r.consumption[static_cast<std::size_t>(t)][key.u | key.v] += 1;
        }
        r.consumption[static_cast<std::size_t>(s)][key.u] += 1;
        r.pairings.push_back(p);
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    for (const auto& [u, used] : r.consumption[static_cast<std::size_t>(s)]) {
      if (used > counts.t_of(u)) {
        throw SynthesisFailure("demand " + std::to_string(j + 1) + ": server " + std::to_string(s + 1) +
                               " needs " + std::to_string(used) + " symbols of support " + u.to_string() +
                               " but only " + std::to_string(counts.t_of(u)) + " exist");
      }
    }
  }

  // Match recovery uses to demand-only symbols, server by server.
  struct Item {
    int natural;
    int order;          // direct symbols first, then pairings in roster order
    int pairing = -1;   // index into r.pairings
    int target = -1;    // index into that pairing's targets
    bool taken = false;
  };
  for (int s = 0; s < n; ++s) {
    std::map<SubsetMask, std::vector<Item>> items;
    for_each_submask(w, [&](SubsetMask v) {
      if (v.size() < 2) return;
      auto& list = items[v];
      for (std::int64_t c = 0; c < counts.t_of(v); ++c) list.push_back(Item{v.size(), static_cast<int>(list.size())});
    });
    for (std::size_t p = 0; p < r.pairings.size(); ++p) {
      const auto& pr = r.pairings[p];
      if (pr.v.size() < 2) continue;
      for (std::size_t t = 0; t < pr.targets.size(); ++t) {
        if (pr.targets[t].server != s) continue;
        auto& list = items[pr.v];
        list.push_back(Item{pr.natural_round, static_cast<int>(list.size()), static_cast<int>(p), static_cast<int>(t)});
      }
    }
    std::vector<RecoveryKey> slots;
    for (const auto& [key, c] : counts.j) {
      if (key.j != j) continue;
      for (std::int64_t x = 0; x < c; ++x) slots.push_back(key);
    }
    std::stable_sort(slots.begin(), slots.end(), [](const RecoveryKey& a, const RecoveryKey& b) {
      return std::tie(a.round, a.v, a.message) < std::tie(b.round, b.v, b.message);
    });
    for (const auto& slot : slots) {
      auto& list = items[slot.v];
      Item* pick = nullptr;
      for (auto& it : list) {
        if (!it.taken && it.natural == slot.round) {
          pick = &it;
          break;
        }
      }
      if (!pick) {
        for (auto& it : list) {
          if (!it.taken && it.natural < slot.round && (!pick || it.natural > pick->natural)) pick = &it;
        }
      }
      if (!pick) {
        for (auto& it : list) {
          if (!it.taken && (!pick || it.natural < pick->natural)) pick = &it;
        }
      }
      if (!pick) {
        throw SynthesisFailure("demand " + std::to_string(j + 1) + ": no demand-only symbol left for recovering message " +
                               std::to_string(slot.message + 1) + " in " + where(slot.round, s, slot.v));
      }
      pick->taken = true;
      const int round = std::max(slot.round, pick->natural);
      if (pick->pairing < 0) {
        r.direct.push_back(DirectUse{s, slot.v, slot.message, round});
        r.consumption[static_cast<std::size_t>(s)][slot.v] += 1;
      } else {
        auto& tg = r.pairings[static_cast<std::size_t>(pick->pairing)].targets[static_cast<std::size_t>(pick->target)];
        tg.message = slot.message;
        tg.round = round;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Index assignment

namespace {

class Indexer {
 public:
  Indexer(const SchemeCounts& counts, int j)
      : counts_(counts),
        inst_(counts.instance),
        n_(inst_.servers),
        l_(static_cast<int>(counts.l)),
        w_(inst_.demand(j)),
        j_(j),
        used_(static_cast<std::size_t>(n_),
              std::vector<std::vector<char>>(static_cast<std::size_t>(inst_.messages),
                                             std::vector<char>(static_cast<std::size_t>(l_ + 1), 0))),
        recovered_(static_cast<std::size_t>(inst_.messages),
                   std::vector<std::map<int, int>>(static_cast<std::size_t>(n_))),
        rr_(static_cast<std::size_t>(n_), std::vector<int>(static_cast<std::size_t>(inst_.messages), 0)),
        symbols_(static_cast<std::size_t>(n_)) {}

  SynthesizedPlan run(const PairingRoster& roster);

 private:
  struct Mark {
    int server, message, index;
  };
  struct Recovery {
    int message, index, server;
  };
  struct Action {
    int round;
    int kind;  // 0 singleton read, 1 direct demand-only use, 2 pairing
    int ref;
  };

  bool is_used(int s, int m, int idx) const { return used_[s][m][idx] != 0; }
  void use(int s, int m, int idx) {
    used_[s][m][idx] = 1;
    marks_.push_back({s, m, idx});
  }
  void recover(int m, int idx, int s, int round) {
    recovered_[m][s][idx] = round;
    recoveries_.push_back({m, idx, s});
  }
  bool used_anywhere(int m, int idx) const {
    for (int s = 0; s < n_; ++s) {
      if (is_used(s, m, idx)) return true;
    }
    return false;
  }
  int fresh_global(int m) const {
    for (int idx = 1; idx <= l_; ++idx) {
      if (!used_anywhere(m, idx)) return idx;
    }
    return -1;
  }
  int fresh_at(int s, int m) const {
    for (int idx = 1; idx <= l_; ++idx) {
      if (!is_used(s, m, idx)) return idx;
    }
    return -1;
  }
  bool usable(int m, int src, int idx) const {
    const int round = recovered_[m][src].at(idx);
    return relaxed_ || round < round_;
  }
  // Known index of m recovered from a server other than s, unused at s;
  // sources visited round-robin.
  int known_elsewhere(int s, int m) {
    for (int step = 0; step < n_; ++step) {
      const int src = (rr_[s][m] + step) % n_;
      if (src == s) continue;
      for (const auto& [idx, round] : recovered_[m][src]) {
        if (is_used(s, m, idx) || !usable(m, src, idx)) continue;
        rr_[s][m] = (src + 1) % n_;
        return idx;
      }
    }
    return -1;
  }
  // Known index of m recovered from `src`, unused at every server in `at`.
  int known_from(int src, int m, const std::vector<int>& at) const {
    for (const auto& [idx, round] : recovered_[m][src]) {
      if (!usable(m, src, idx)) continue;
      bool ok = true;
      for (int s : at) ok = ok && !is_used(s, m, idx);
      if (ok) return idx;
    }
    return -1;
  }

  int add_symbol(int s, std::vector<Subpacket> terms) {
    std::sort(terms.begin(), terms.end());
    auto& list = symbols_[static_cast<std::size_t>(s)];
    list.push_back(Symbol{std::move(terms)});
    return static_cast<int>(list.size()) - 1;
  }

  void begin() {
    marks_.clear();
    recoveries_.clear();
    saved_rr_ = rr_;
    saved_sizes_.clear();
    for (const auto& list : symbols_) saved_sizes_.push_back(list.size());
    saved_steps_ = steps_.size();
    saved_virtuals_ = virtuals_;
  }
  void rollback() {
    for (const auto& m : marks_) used_[m.server][m.message][m.index] = 0;
    for (const auto& r : recoveries_) recovered_[r.message][r.server].erase(r.index);
    rr_ = saved_rr_;
    for (std::size_t s = 0; s < symbols_.size(); ++s) symbols_[s].resize(saved_sizes_[s]);
    steps_.resize(saved_steps_);
    virtuals_ = saved_virtuals_;
  }

  bool singleton(int s, int i);
  bool direct(const DirectUse& d, std::string& why);
  bool pairing(const PairingInstance& p, std::string& why);
  void fill(const std::vector<std::map<SubsetMask, std::int64_t>>& indexed);

  const SchemeCounts& counts_;
  const DemandInstance& inst_;
  int n_;
  int l_;
  SubsetMask w_;
  int j_;
  int round_ = 1;
  bool relaxed_ = false;
  std::vector<std::vector<std::vector<char>>> used_;
  // recovered_[m][server]: index -> round it was recovered in.
  std::vector<std::vector<std::map<int, int>>> recovered_;
  std::vector<std::vector<int>> rr_;
  std::vector<std::vector<Symbol>> symbols_;
  std::vector<std::map<SubsetMask, std::int64_t>> indexed_;
  std::vector<DecodeStep> steps_;
  int virtuals_ = 0;

  std::vector<Mark> marks_;
  std::vector<Recovery> recoveries_;
  std::vector<std::vector<int>> saved_rr_;
  std::vector<std::size_t> saved_sizes_;
  std::size_t saved_steps_ = 0;
  int saved_virtuals_ = 0;
};

bool Indexer::singleton(int s, int i) {
  const int idx = fresh_global(i);
  if (idx < 0) return false;
  use(s, i, idx);
  const int pos = add_symbol(s, {{i, idx}});
  recover(i, idx, s, round_);
  DecodeStep st;
  st.kind = StepKind::DirectRead;
  st.round = std::min(round_, inst_.demand_size);
  st.source = {s, pos};
  st.recovered = {i, idx};
  steps_.push_back(st);
  return true;
}

bool Indexer::direct(const DirectUse& d, std::string& why) {
  const int s = d.server;
  std::vector<Subpacket> terms;
  std::vector<Subpacket> known;
  const int z = fresh_global(d.message);
  if (z < 0) {
    why = "no unused subpacket of message " + std::to_string(d.message + 1);
    return false;
  }
  use(s, d.message, z);
  terms.push_back({d.message, z});
  for (int m : d.v.without(d.message).members()) {
    const int y = known_elsewhere(s, m);
    if (y < 0) {
      why = "no recovered subpacket of message " + std::to_string(m + 1) + " available";
      return false;
    }
    use(s, m, y);
    terms.push_back({m, y});
    known.push_back({m, y});
  }
  const int pos = add_symbol(s, terms);
  recover(d.message, z, s, round_);
  DecodeStep st;
  st.kind = StepKind::CancelKnown;
  st.round = std::min(round_, inst_.demand_size);
  st.source = {s, pos};
  st.known = known;
  st.recovered = {d.message, z};
  steps_.push_back(st);
  ++indexed_[static_cast<std::size_t>(s)][d.v];
  return true;
}

bool Indexer::pairing(const PairingInstance& p, std::string& why) {
  const int s = p.side_server;
  const SubsetMask shared = p.u & w_;
  const SubsetMask interference = p.u - w_;
  std::vector<int> target_servers;
  for (const auto& t : p.targets) target_servers.push_back(t.server);

  std::vector<Subpacket> side_terms;
  std::vector<Subpacket> common;  // interference part shared by side and targets
  for (int m : interference.members()) {
    const int idx = fresh_global(m);
    if (idx < 0) {
      why = "no unused subpacket of interference message " + std::to_string(m + 1);
      return false;
    }
    for (int x = 0; x < n_; ++x) use(x, m, idx);
    side_terms.push_back({m, idx});
    common.push_back({m, idx});
  }
  std::vector<Subpacket> side_known;
  for (int m : shared.members()) {
    const int y = known_elsewhere(s, m);
    if (y < 0) {
      why = "side symbol lacks a recovered subpacket of message " + std::to_string(m + 1);
      return false;
    }
    use(s, m, y);
    side_terms.push_back({m, y});
    side_known.push_back({m, y});
  }
  // Demand messages shared by side and targets: one index recovered from the
  // side server, unused at every target server.
  std::map<int, int> target_shared;
  for (int m : shared.members()) {
    const int y = known_from(s, m, target_servers);
    if (y >= 0) {
      target_shared[m] = y;
      for (int t : target_servers) use(t, m, y);
    }
  }
  const int side_pos = add_symbol(s, side_terms);
  ++indexed_[static_cast<std::size_t>(s)][p.u];

  for (const auto& tg : p.targets) {
    const int t = tg.server;
    std::vector<Subpacket> terms = common;
    std::vector<Subpacket> known = side_known;
    for (int m : shared.members()) {
      int y;
      auto it = target_shared.find(m);
      if (it != target_shared.end()) {
        y = it->second;
      } else {
        y = known_elsewhere(t, m);
        if (y < 0) {
          why = "target at server " + std::to_string(t + 1) + " lacks a recovered subpacket of message " +
                std::to_string(m + 1);
          return false;
        }
        use(t, m, y);
      }
      terms.push_back({m, y});
      known.push_back({m, y});
    }
    const int z = fresh_global(tg.message);
    if (z < 0) {
      why = "no unused subpacket of message " + std::to_string(tg.message + 1);
      return false;
    }
    use(t, tg.message, z);
    terms.push_back({tg.message, z});
    for (int m : p.v.without(tg.message).members()) {
      const int y = known_elsewhere(t, m);
      if (y < 0) {
        why = "target at server " + std::to_string(t + 1) + " lacks a recovered subpacket of message " +
              std::to_string(m + 1);
        return false;
      }
      use(t, m, y);
      terms.push_back({m, y});
      known.push_back({m, y});
    }
    const int pos = add_symbol(t, terms);
    ++indexed_[static_cast<std::size_t>(t)][p.u | p.v];
    recover(tg.message, z, t, round_);

    DecodeStep sub;
    sub.kind = StepKind::PairSubtract;
    sub.round = std::min(round_, inst_.demand_size);
    sub.source = {t, pos};
    sub.side = {s, side_pos};
    sub.virtual_id = virtuals_++;
    steps_.push_back(sub);
    DecodeStep ck;
    ck.kind = StepKind::CancelKnown;
    ck.round = sub.round;
    ck.virtual_id = sub.virtual_id;
    std::sort(known.begin(), known.end());
    ck.known = known;
    ck.recovered = {tg.message, z};
    steps_.push_back(ck);
  }
  return true;
}

void Indexer::fill(const std::vector<std::map<SubsetMask, std::int64_t>>& indexed) {
  for (int s = 0; s < n_; ++s) {
    for (const auto& [u, total] : counts_.t) {
      auto it = indexed[static_cast<std::size_t>(s)].find(u);
      const std::int64_t done = it == indexed[static_cast<std::size_t>(s)].end() ? 0 : it->second;
      for (std::int64_t c = done; c < total; ++c) {
        std::vector<Subpacket> terms;
        for (int m : u.members()) {
          const int idx = fresh_at(s, m);
          if (idx < 0) {
            throw SynthesisFailure("demand " + std::to_string(j_ + 1) + ": filler indexing exhausted message " +
                                   std::to_string(m + 1) + " at " + where(inst_.demand_size, s, u));
          }
          use(s, m, idx);
          terms.push_back({m, idx});
        }
        add_symbol(s, terms);
      }
    }
  }
}

SynthesizedPlan Indexer::run(const PairingRoster& roster) {
  const int d = inst_.demand_size;
  indexed_.assign(static_cast<std::size_t>(n_), {});

  std::vector<Action> pending;
  for (int s = 0; s < n_; ++s) {
    for (int i : w_.members()) {
      for (std::int64_t c = 0; c < counts_.t_of(SubsetMask::single(i)); ++c) pending.push_back({1, 0, s * 64 + i});
    }
  }
  for (std::size_t x = 0; x < roster.direct.size(); ++x) {
    pending.push_back({roster.direct[x].round, 1, static_cast<int>(x)});
  }
  for (std::size_t x = 0; x < roster.pairings.size(); ++x) {
    int round = 0;
    for (const auto& t : roster.pairings[x].targets) {
      if (t.message >= 0) round = std::max(round, t.round);
    }
    if (round > 0) pending.push_back({round, 2, static_cast<int>(x)});
  }
  std::stable_sort(pending.begin(), pending.end(), [](const Action& a, const Action& b) {
    return std::tie(a.round, a.kind) < std::tie(b.round, b.kind);
  });

  std::string last_why;
  Action last_failed{};
  for (round_ = 1; !pending.empty(); ++round_) {
    relaxed_ = round_ > d;
    bool progress = false;
    std::vector<Action> next;
    for (const auto& a : pending) {
      if (a.round > round_) {
        next.push_back(a);
        continue;
      }
      begin();
      std::string why;
      bool ok = false;
      if (a.kind == 0) {
        ok = singleton(a.ref / 64, a.ref % 64);
        if (!ok) why = "no unused subpacket of message " + std::to_string(a.ref % 64 + 1);
      } else if (a.kind == 1) {
        ok = direct(roster.direct[static_cast<std::size_t>(a.ref)], why);
      } else {
        // Only targets matched to a recovery use are indexed here.
        PairingInstance p = roster.pairings[static_cast<std::size_t>(a.ref)];
        p.targets.erase(std::remove_if(p.targets.begin(), p.targets.end(),
                                       [](const PairingInstance::Target& t) { return t.message < 0; }),
                        p.targets.end());
        ok = pairing(p, why);
      }
      if (ok) {
        progress = true;
      } else {
        rollback();
        next.push_back(a);
        last_why = why;
        last_failed = a;
      }
    }
    pending = std::move(next);
    if (!progress && relaxed_ && !pending.empty()) {
      int server = 0;
      SubsetMask support;
      if (last_failed.kind == 0) {
        server = last_failed.ref / 64;
        support = SubsetMask::single(last_failed.ref % 64);
      } else if (last_failed.kind == 1) {
        const auto& dd = roster.direct[static_cast<std::size_t>(last_failed.ref)];
        server = dd.server;
        support = dd.v;
      } else {
        const auto& p = roster.pairings[static_cast<std::size_t>(last_failed.ref)];
        server = p.side_server;
        support = p.u | p.v;
      }
      throw SynthesisFailure("demand " + std::to_string(j_ + 1) + ": indexing stalled at " +
                             where(last_failed.round, server, support) + ": " + last_why);
    }
  }
  // Singleton reads were not counted in indexed_ yet.
  for (int s = 0; s < n_; ++s) {
    for (int i : w_.members()) {
      const auto c = counts_.t_of(SubsetMask::single(i));
      if (c) indexed_[static_cast<std::size_t>(s)][SubsetMask::single(i)] += c;
    }
  }
  for (int s = 0; s < n_; ++s) {
    for (const auto& [u, c] : indexed_[static_cast<std::size_t>(s)]) {
      if (c > counts_.t_of(u)) {
        throw SynthesisFailure("demand " + std::to_string(j_ + 1) + ": " + where(d, s, u) + " indexed " +
                               std::to_string(c) + " symbols, more than T");
      }
    }
  }
  marks_.clear();
  fill(indexed_);

  // Canonical download order: by cardinality, support, then terms.
  SynthesizedPlan out;
  out.query.demand = j_;
  out.query.l = l_;
  out.query.servers.resize(static_cast<std::size_t>(n_));
  std::vector<std::vector<int>> new_pos(static_cast<std::size_t>(n_));
  for (int s = 0; s < n_; ++s) {
    auto& list = symbols_[static_cast<std::size_t>(s)];
    std::vector<int> order(list.size());
    for (std::size_t x = 0; x < order.size(); ++x) order[x] = static_cast<int>(x);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const auto& sa = list[static_cast<std::size_t>(a)];
      const auto& sb = list[static_cast<std::size_t>(b)];
      const SubsetMask ua = sa.support();
      const SubsetMask ub = sb.support();
      return std::make_tuple(ua.size(), ua, sa.terms) < std::make_tuple(ub.size(), ub, sb.terms);
    });
    auto& np = new_pos[static_cast<std::size_t>(s)];
    np.resize(list.size());
    for (std::size_t x = 0; x < order.size(); ++x) {
      np[static_cast<std::size_t>(order[x])] = static_cast<int>(x);
      out.query.servers[static_cast<std::size_t>(s)].push_back(list[static_cast<std::size_t>(order[x])]);
    }
  }
  auto remap = [&](SymbolRef& r) { r.position = new_pos[static_cast<std::size_t>(r.server)][static_cast<std::size_t>(r.position)]; };
  for (auto& st : steps_) {
    if (st.kind == StepKind::PairSubtract) {
      remap(st.source);
      remap(st.side);
    } else if (st.virtual_id < 0) {
      remap(st.source);
    }
  }
  out.decoding.demand = j_;
  out.decoding.l = l_;
  out.decoding.virtual_count = virtuals_;
  out.decoding.steps = std::move(steps_);
  return out;
}

}  // namespace

SynthesizedPlan assign_indices(const SchemeCounts& counts, int j, const PairingRoster& roster) {
  if (counts.l < 1 || counts.l > (1 << 24)) throw InvalidInput("L out of range for synthesis");
  if (roster.demand != j) throw InvalidInput("roster was built for another demand");
  Indexer ix(counts, j);
  return ix.run(roster);
}

SynthesizedPlan synthesize(const SchemeCounts& counts, int j) {
  const auto issues = check_scheme_counts(counts);
  if (!issues.empty()) throw SynthesisFailure("counts are infeasible: " + issues.front());
  if (j < 0 || j >= counts.instance.family_size()) throw InvalidInput("demand index out of range");
  const PairingRoster roster = plan_pairings(counts, j);
  SynthesizedPlan plan = assign_indices(counts, j, roster);
  const auto problems = replay_symbolically(counts.instance, plan.query, plan.decoding);
  if (!problems.empty()) {
    throw SynthesisFailure("demand " + std::to_string(j + 1) + ": synthesized plan does not decode: " +
                           problems.front());
  }
  return plan;
}

std::vector<SynthesizedPlan> synthesize_all(const SchemeCounts& counts) {
  std::vector<SynthesizedPlan> out;
  for (int j = 0; j < counts.instance.family_size(); ++j) out.push_back(synthesize(counts, j));
  return out;
}

// ---------------------------------------------------------------------------
// Symbolic replay

std::vector<std::string> replay_symbolically(const DemandInstance& inst, const QueryPlan& query,
                                             const DecodingPlan& decoding) {
  std::vector<std::string> bad;
  const int n = inst.servers;
  const SubsetMask w = inst.demand(query.demand);
  const std::int64_t l = query.l;
  if (static_cast<int>(query.servers.size()) != n) return {"query has the wrong number of servers"};

  // A formal combination: term -> (coefficient, server the term came from).
  using Expr = std::map<Subpacket, std::pair<int, int>>;
  std::vector<Expr> virt(static_cast<std::size_t>(std::max(decoding.virtual_count, 0)));
  std::vector<char> virt_set(virt.size(), 0);
  std::map<Subpacket, int> recovered;  // term -> server it was recovered from

  auto lookup = [&](const SymbolRef& r) -> const Symbol* {
    if (r.server < 0 || r.server >= n) return nullptr;
    const auto& list = query.servers[static_cast<std::size_t>(r.server)];
    if (r.position < 0 || r.position >= static_cast<int>(list.size())) return nullptr;
    return &list[static_cast<std::size_t>(r.position)];
  };
  auto expr_of = [&](const Symbol& s, int server, int sign) {
    Expr e;
    for (const auto& t : s.terms) e[t] = {sign, server};
    return e;
  };

  for (std::size_t x = 0; x < decoding.steps.size(); ++x) {
    const auto& st = decoding.steps[x];
    const std::string at = "step " + std::to_string(x + 1) + " (" + to_string(st.kind) + "): ";
    if (st.round < 1 || st.round > inst.demand_size) bad.push_back(at + "round tag out of range");
    if (st.kind == StepKind::PairSubtract) {
      const Symbol* tgt = lookup(st.source);
      const Symbol* side = lookup(st.side);
      if (!tgt || !side) {
        bad.push_back(at + "bad symbol reference");
        continue;
      }
      if (st.source.server == st.side.server) bad.push_back(at + "side and target on the same server");
      if (st.virtual_id < 0 || st.virtual_id >= static_cast<int>(virt.size()) || virt_set[static_cast<std::size_t>(st.virtual_id)]) {
        bad.push_back(at + "bad virtual symbol id");
        continue;
      }
      Expr e = expr_of(*tgt, st.source.server, 1);
      for (const auto& t : side->terms) {
        auto it = e.find(t);
        if (it != e.end()) {
          e.erase(it);
        } else {
          e[t] = {-1, st.side.server};
        }
      }
      for (const auto& [t, cs] : e) {
        if (!w.contains(t.message)) {
          bad.push_back(at + "interference subpacket " + std::to_string(t.message + 1) + "/" + std::to_string(t.index) +
                        " does not cancel");
        }
      }
      virt[static_cast<std::size_t>(st.virtual_id)] = e;
      virt_set[static_cast<std::size_t>(st.virtual_id)] = 1;
      continue;
    }

    Expr e;
    int provider = -1;
    if (st.kind == StepKind::CancelKnown && st.virtual_id >= 0) {
      if (st.virtual_id >= static_cast<int>(virt.size()) || !virt_set[static_cast<std::size_t>(st.virtual_id)]) {
        bad.push_back(at + "virtual symbol used before it is formed");
        continue;
      }
      e = virt[static_cast<std::size_t>(st.virtual_id)];
    } else {
      const Symbol* s = lookup(st.source);
      if (!s) {
        bad.push_back(at + "bad symbol reference");
        continue;
      }
      e = expr_of(*s, st.source.server, 1);
      provider = st.source.server;
    }
    if (st.kind == StepKind::DirectRead && !st.known.empty()) bad.push_back(at + "direct read lists known terms");
    for (const auto& k : st.known) {
      auto rec = recovered.find(k);
      if (rec == recovered.end()) {
        bad.push_back(at + "known subpacket " + std::to_string(k.message + 1) + "/" + std::to_string(k.index) +
                      " was not recovered earlier");
        continue;
      }
      auto it = e.find(k);
      if (it == e.end()) {
        bad.push_back(at + "known subpacket not present in the symbol");
        continue;
      }
      if (rec->second == it->second.second) {
        bad.push_back(at + "known subpacket was recovered from the server that supplies it here");
      }
      e.erase(it);
    }
    if (e.size() != 1) {
      bad.push_back(at + std::to_string(e.size()) + " unknowns remain after cancellation");
      continue;
    }
    const auto& [term, cs] = *e.begin();
    if (cs.first != 1) bad.push_back(at + "recovered subpacket has coefficient -1");
    if (!(term == st.recovered)) bad.push_back(at + "recovers a different subpacket than declared");
    if (!w.contains(term.message)) bad.push_back(at + "recovers an interference subpacket");
    if (term.index < 1 || term.index > l) bad.push_back(at + "subpacket index out of range");
    if (recovered.count(term)) bad.push_back(at + "subpacket recovered twice");
    recovered[term] = provider >= 0 ? provider : cs.second;
  }

  std::map<std::pair<int, int>, std::int64_t> per_server;
  for (const auto& [t, s] : recovered) ++per_server[{t.message, s}];
  for (int m : w.members()) {
    for (int s = 0; s < n; ++s) {
      const auto got = per_server[{m, s}];
      if (got * n != l) {
        bad.push_back("message " + std::to_string(m + 1) + ": " + std::to_string(got) + " subpackets recovered from server " +
                      std::to_string(s + 1) + ", expected L/N");
      }
    }
  }
  if (static_cast<std::int64_t>(recovered.size()) != inst.demand_size * l) {
    bad.push_back(std::to_string(recovered.size()) + " subpackets recovered, expected D*L");
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Privacy

PrivacyReport verify_structural_privacy(const std::vector<QueryPlan>& plans,
                                        const std::optional<std::map<SubsetMask, std::int64_t>>& expected) {
  PrivacyReport r;
  auto fail = [&](std::string msg) {
    r.passed = false;
    r.violations.push_back(std::move(msg));
  };
  if (plans.empty()) return r;
  const std::size_t n = plans.front().servers.size();
  for (const auto& p : plans) {
    if (p.servers.size() != n) fail("demand " + std::to_string(p.demand + 1) + ": server count differs");
  }
  if (!r.passed) return r;

  for (std::size_t s = 0; s < n; ++s) {
    const int server = static_cast<int>(s);
    const auto reference = expected ? *expected : plans.front().support_counts(server);
    std::map<int, std::size_t> ref_distinct;
    for (std::size_t x = 0; x < plans.size(); ++x) {
      const auto& p = plans[x];
      const std::string who = "server " + std::to_string(s + 1) + ", demand " + std::to_string(p.demand + 1) + ": ";
      auto counts = p.support_counts(server);
      if (counts != reference) {
        std::string detail;
        for (const auto& [u, c] : reference) {
          auto it = counts.find(u);
          const std::int64_t got = it == counts.end() ? 0 : it->second;
          if (got != c) {
            detail = "support " + u.to_string() + " appears " + std::to_string(got) + " times, expected " + std::to_string(c);
            break;
          }
        }
        if (detail.empty()) {
          for (const auto& [u, c] : counts) {
            if (!reference.count(u)) {
              detail = "unexpected support " + u.to_string();
              break;
            }
          }
        }
        fail(who + "(a) support multiset differs: " + detail);
      }
      std::set<Subpacket> seen;
      std::map<int, std::set<int>> distinct;
      for (const auto& sym : p.servers[s]) {
        for (const auto& t : sym.terms) {
          if (!seen.insert(t).second) {
            fail(who + "(b) subpacket " + std::to_string(t.message + 1) + "/" + std::to_string(t.index) +
                 " appears twice");
          }
          distinct[t.message].insert(t.index);
        }
      }
      std::map<int, std::size_t> sizes;
      for (const auto& [m, set] : distinct) sizes[m] = set.size();
      if (x == 0) {
        ref_distinct = sizes;
      } else if (sizes != ref_distinct) {
        fail(who + "(c) distinct subpacket counts per message differ from demand " +
             std::to_string(plans.front().demand + 1));
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string message_name(int m) {
  if (m < 26) return std::string(1, static_cast<char>('a' + m));
  return "x" + std::to_string(m + 1);
}

std::string symbol_text(const Symbol& s) {
  std::string out;
  for (const auto& t : s.terms) {
    if (!out.empty()) out += "+";
    out += message_name(t.message) + std::to_string(t.index);
  }
  return out;
}

std::string term_text(const Subpacket& t) { return message_name(t.message) + std::to_string(t.index); }

}  // namespace

std::string render_query_table(const QueryPlan& plan) {
  const std::size_t n = plan.servers.size();
  // rows[cardinality][support] -> cell text per server
  std::map<int, std::map<SubsetMask, std::vector<std::string>>> rows;
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& sym : plan.servers[s]) {
      const SubsetMask u = sym.support();
      auto& cells = rows[u.size()][u];
      cells.resize(n);
      if (!cells[s].empty()) cells[s] += ", ";
      cells[s] += symbol_text(sym);
    }
  }
  std::vector<std::size_t> width(n, 0);
  for (std::size_t s = 0; s < n; ++s) width[s] = std::string("Server " + std::to_string(s + 1)).size();
  for (const auto& [c, by] : rows) {
    for (const auto& [u, cells] : by) {
      for (std::size_t s = 0; s < n; ++s) width[s] = std::max(width[s], cells[s].size());
    }
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t s = 0; s < n; ++s) {
      if (s) out += " | ";
      out += cells[s] + std::string(width[s] - cells[s].size(), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string rule;
  for (std::size_t s = 0; s < n; ++s) rule += (s ? "-+-" : "") + std::string(width[s], '-');
  rule += "\n";

  std::ostringstream os;
  os << "Demand W" << plan.demand + 1 << ", L = " << plan.l << "\n";
  std::vector<std::string> head;
  for (std::size_t s = 0; s < n; ++s) head.push_back("Server " + std::to_string(s + 1));
  os << line(head) << rule;
  for (const auto& [c, by] : rows) {
    for (const auto& [u, cells] : by) os << line(cells);
    os << rule;
  }
  return os.str();
}

std::string render_decoding_plan(const DecodingPlan& plan) {
  std::ostringstream os;
  auto ref = [](const SymbolRef& r) {
    return "S" + std::to_string(r.server + 1) + "#" + std::to_string(r.position + 1);
  };
  for (const auto& st : plan.steps) {
    os << "round " << st.round << "  " << to_string(st.kind) << "  ";
    switch (st.kind) {
      case StepKind::DirectRead:
        os << ref(st.source) << " -> " << term_text(st.recovered);
        break;
      case StepKind::PairSubtract:
        os << "v" << st.virtual_id << " = " << ref(st.source) << " - " << ref(st.side);
        break;
      case StepKind::CancelKnown: {
        os << (st.virtual_id >= 0 ? "v" + std::to_string(st.virtual_id) : ref(st.source));
        for (const auto& k : st.known) os << " - " << term_text(k);
        os << " -> " << term_text(st.recovered);
        break;
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string plan_digest(const SynthesizedPlan& plan) {
  const std::string text = render_query_table(plan.query) + render_decoding_plan(plan.decoding);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pssr
