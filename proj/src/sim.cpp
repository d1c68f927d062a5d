#include "pssr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "pssr/errors.hpp"

namespace pssr {

MessageStore::MessageStore(std::uint32_t field_order, int messages, std::int64_t l, std::uint64_t seed)
    : field_(field_order), l_(l), seed_(seed) {
  if (messages < 1 || l < 1) throw InvalidInput("message store needs K >= 1 and L >= 1");
  std::mt19937_64 gen(seed);
  data_.assign(static_cast<std::size_t>(messages), std::vector<std::uint32_t>(static_cast<std::size_t>(l)));
  for (auto& msg : data_) {
    for (auto& x : msg) x = field_.from_word(gen());
  }
}

std::uint32_t MessageStore::at(int message, int index) const {
  if (message < 0 || message >= messages() || index < 1 || index > l_) {
    throw InvalidInput("subpacket " + std::to_string(message + 1) + "/" + std::to_string(index) + " out of range");
  }
  return data_[static_cast<std::size_t>(message)][static_cast<std::size_t>(index - 1)];
}

Transcript run_protocol(const DemandInstance& inst, const QueryPlan& query, const DecodingPlan& decoding,
                        const MessageStore& store) {
  const FiniteField& f = store.field();
  if (store.l() != query.l || store.messages() != inst.messages) {
    throw InvalidInput("message store does not match the plan's K and L");
  }
  if (static_cast<int>(query.servers.size()) != inst.servers) throw InvalidInput("plan has the wrong server count");
  Transcript tr;
  tr.demand = query.demand;
  tr.field_order = f.order();
  tr.seed = store.seed();

  const std::size_t per_server = query.servers.front().size();
  for (const auto& list : query.servers) {
    if (list.size() != per_server) throw CorrectnessFailure("servers receive queries of different lengths");
    std::vector<std::uint32_t> ans;
    ans.reserve(list.size());
    for (const auto& sym : list) {
      std::uint32_t v = 0;
      for (const auto& t : sym.terms) v = f.add(v, store.at(t.message, t.index));
      ans.push_back(v);
    }
    tr.answers.push_back(std::move(ans));
  }

  // The decoder knows each symbol's structure; it tracks coefficients
  // alongside values.
  struct Expr {
    std::map<Subpacket, int> coef;
    std::uint32_t value = 0;
  };
  std::vector<Expr> virt(static_cast<std::size_t>(std::max(decoding.virtual_count, 0)));
  auto answer = [&](const SymbolRef& r) -> Expr {
    if (r.server < 0 || r.server >= inst.servers || r.position < 0 ||
        r.position >= static_cast<int>(query.servers[static_cast<std::size_t>(r.server)].size())) {
      throw CorrectnessFailure("decoding plan references a missing symbol");
    }
    Expr e;
    for (const auto& t : query.servers[static_cast<std::size_t>(r.server)][static_cast<std::size_t>(r.position)].terms) {
      e.coef[t] = 1;
    }
    e.value = tr.answers[static_cast<std::size_t>(r.server)][static_cast<std::size_t>(r.position)];
    return e;
  };
  auto scaled = [&](int c, std::uint32_t x) { return c >= 0 ? x : f.neg(x); };

  for (std::size_t x = 0; x < decoding.steps.size(); ++x) {
    const auto& st = decoding.steps[x];
    const std::string at = "step " + std::to_string(x + 1) + " (" + to_string(st.kind) + ", round " +
                           std::to_string(st.round) + ")";
    if (st.kind == StepKind::PairSubtract) {
      Expr t = answer(st.source);
      const Expr s = answer(st.side);
      for (const auto& [term, c] : s.coef) {
        if ((t.coef[term] -= c) == 0) t.coef.erase(term);
      }
      t.value = f.sub(t.value, s.value);
      if (st.virtual_id < 0 || st.virtual_id >= static_cast<int>(virt.size())) {
        throw CorrectnessFailure(at + ": bad virtual symbol id");
      }
      virt[static_cast<std::size_t>(st.virtual_id)] = std::move(t);
      continue;
    }
    Expr e;
    if (st.kind == StepKind::CancelKnown && st.virtual_id >= 0) {
      if (st.virtual_id >= static_cast<int>(virt.size())) throw CorrectnessFailure(at + ": bad virtual symbol id");
      e = virt[static_cast<std::size_t>(st.virtual_id)];
    } else {
      e = answer(st.source);
    }
    for (const auto& k : st.known) {
      auto rec = tr.recovered.find(k);
      if (rec == tr.recovered.end()) throw CorrectnessFailure(at + ": uses a subpacket not yet recovered");
      auto it = e.coef.find(k);
      if (it == e.coef.end()) throw CorrectnessFailure(at + ": cancels a subpacket absent from the symbol");
      e.value = f.sub(e.value, scaled(it->second, rec->second));
      e.coef.erase(it);
    }
    auto it = e.coef.find(st.recovered);
    if (e.coef.size() != 1 || it == e.coef.end()) {
      throw CorrectnessFailure(at + ": " + std::to_string(e.coef.size()) + " unknowns left instead of the declared one");
    }
    const std::uint32_t value = scaled(it->second, e.value);
    const std::uint32_t truth = store.at(st.recovered.message, st.recovered.index);
    if (value != truth) {
      throw CorrectnessFailure(at + ": recovered " + std::to_string(value) + " for subpacket " +
                               std::to_string(st.recovered.message + 1) + "/" + std::to_string(st.recovered.index) +
                               ", stored value is " + std::to_string(truth));
    }
    tr.recovered[st.recovered] = value;
  }

  const SubsetMask w = inst.demand(query.demand);
  for (int m : w.members()) {
    for (int idx = 1; idx <= query.l; ++idx) {
      if (!tr.recovered.count(Subpacket{m, idx})) {
        throw CorrectnessFailure("subpacket " + std::to_string(m + 1) + "/" + std::to_string(idx) + " never recovered");
      }
    }
  }
  if (static_cast<std::int64_t>(tr.recovered.size()) != inst.demand_size * query.l) {
    throw CorrectnessFailure("decoder recovered subpackets outside the demand");
  }
  tr.downloads = static_cast<std::int64_t>(per_server) * inst.servers;
  tr.rate = make_rational(BigInt(inst.demand_size) * BigInt(static_cast<long>(query.l)),
                          BigInt(static_cast<long>(tr.downloads)));
  return tr;
}

// ---------------------------------------------------------------------------
// Privacy relabeling

namespace {

// Relabels, sorts, then renames each message's labels by first appearance.
// The result depends only on the orbit of the query and the sampled labels.
std::string canonical_query(const std::vector<Symbol>& query, const std::vector<std::vector<int>>& perm) {
  std::vector<std::vector<Subpacket>> syms;
  syms.reserve(query.size());
  for (const auto& s : query) {
    std::vector<Subpacket> t;
    for (const auto& x : s.terms) {
      t.push_back({x.message, perm[static_cast<std::size_t>(x.message)][static_cast<std::size_t>(x.index - 1)]});
    }
    std::sort(t.begin(), t.end());
    syms.push_back(std::move(t));
  }
  std::sort(syms.begin(), syms.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].message != b[i].message) return a[i].message < b[i].message;
    }
    return a < b;
  });
  std::map<Subpacket, int> rename;
  std::map<int, int> next;
  std::ostringstream os;
  for (const auto& s : syms) {
    for (const auto& x : s) {
      auto it = rename.find(x);
      if (it == rename.end()) it = rename.emplace(x, ++next[x.message]).first;
      os << x.message << '.' << it->second << ' ';
    }
    os << '|';
  }
  return os.str();
}

double total_variation(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  // Integer differences keep identical samples at exactly zero.
  std::unordered_map<std::size_t, std::int64_t> diff;
  const auto na = static_cast<std::int64_t>(a.size());
  const auto nb = static_cast<std::int64_t>(b.size());
  for (auto x : a) diff[x] += nb;
  for (auto x : b) diff[x] -= na;
  std::int64_t s = 0;
  for (const auto& [k, v] : diff) s += v < 0 ? -v : v;
  return static_cast<double>(s) / (2.0 * static_cast<double>(na) * static_cast<double>(nb));
}

}  // namespace

PrivacyTestReport privacy_relabeling_test(const std::vector<QueryPlan>& plans, std::int64_t trials,
                                          std::uint64_t seed) {
  PrivacyTestReport r;
  r.trials = trials;
  r.seed = seed;
  if (plans.empty() || trials < 1) return r;
  const std::size_t n = plans.front().servers.size();
  const std::int64_t l = plans.front().l;
  int k = 0;
  for (const auto& p : plans) {
    if (p.l != l || p.servers.size() != n) throw InvalidInput("plans disagree on L or the server count");
    for (const auto& list : p.servers) {
      for (const auto& s : list) {
        for (const auto& t : s.terms) k = std::max(k, t.message + 1);
      }
    }
  }

  // samples[s][j][trial]: id of the canonical query. The same relabeling is
  // applied to every demand within a trial.
  std::vector<std::vector<std::vector<std::size_t>>> samples(
      n, std::vector<std::vector<std::size_t>>(plans.size()));
  std::map<std::string, std::size_t> ids;
  std::mt19937_64 gen(seed);
  std::vector<std::vector<int>> perm(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(l)));
  for (std::int64_t t = 0; t < trials; ++t) {
    for (std::size_t s = 0; s < n; ++s) {
      for (auto& p : perm) {
        std::iota(p.begin(), p.end(), 1);
        std::shuffle(p.begin(), p.end(), gen);
      }
      for (std::size_t j = 0; j < plans.size(); ++j) {
        const std::string c = canonical_query(plans[j].servers[s], perm);
        auto it = ids.emplace(c, ids.size()).first;
        samples[s][j].push_back(it->second);
      }
    }
  }

  std::mt19937_64 split(seed ^ 0x9e3779b97f4a7c15ULL);
  r.within_band = true;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < plans.size(); ++a) {
      for (std::size_t b = a + 1; b < plans.size(); ++b) {
        const double tv = total_variation(samples[s][a], samples[s][b]);
        // Null band from random re-splits of the pooled sample.
        std::vector<std::size_t> pool = samples[s][a];
        pool.insert(pool.end(), samples[s][b].begin(), samples[s][b].end());
        constexpr int kSplits = 20;
        double sum = 0, sq = 0;
        for (int x = 0; x < kSplits; ++x) {
          std::shuffle(pool.begin(), pool.end(), split);
          const auto mid = pool.begin() + static_cast<std::ptrdiff_t>(samples[s][a].size());
          const double v = total_variation({pool.begin(), mid}, {mid, pool.end()});
          sum += v;
          sq += v * v;
        }
        const double mean = sum / kSplits;
        const double sd = std::sqrt(std::max(0.0, sq / kSplits - mean * mean));
        const double band = mean + 3 * sd;
        if (tv > band) r.within_band = false;
        if (tv >= r.max_distance) {
          r.max_distance = tv;
          r.band = band;
          r.worst_server = static_cast<int>(s);
          r.worst_pair_a = plans[a].demand;
          r.worst_pair_b = plans[b].demand;
        }
      }
    }
  }
  return r;
}

CampaignSummary fuzz_campaign(const DemandInstance& inst, const std::vector<SynthesizedPlan>& plans,
                              std::uint64_t first_seed, std::uint64_t seed_count,
                              const std::vector<std::uint32_t>& field_orders) {
  CampaignSummary out;
  bool have_rate = false;
  for (const auto& plan : plans) {
    for (std::uint64_t seed = first_seed; seed < first_seed + seed_count; ++seed) {
      for (std::uint32_t q : field_orders) {
        ++out.runs;
        try {
          const MessageStore store(q, inst.messages, plan.query.l, seed);
          const Transcript tr = run_protocol(inst, plan.query, plan.decoding, store);
          if (!have_rate) {
            out.rate = tr.rate;
            have_rate = true;
          } else if (tr.rate != out.rate) {
            out.rate_constant = false;
          }
          ++out.passed;
        } catch (const CorrectnessFailure& e) {
          ++out.failed;
          out.failure = CampaignFailure{plan.query.demand, seed, q, e.what()};
          return out;
        }
      }
    }
  }
  return out;
}

}  // namespace pssr
