#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "pssr/errors.hpp"
#include "pssr/scheme_program.hpp"
#include "pssr/synth.hpp"

using namespace pssr;
using fixtures::example_instance;
using fixtures::set1;

namespace {

SchemeCounts reference_counts() {
  return complete_recovery_counts(example_instance(), fixtures::reference_symbol_counts(), 8);
}

SchemeCounts optimized_counts(const DemandInstance& inst) {
  const auto rr = maximize_rate(inst);
  return minimize_subpacketization(inst, rr.rate, rr.counts).counts;
}

std::vector<QueryPlan> queries_of(const std::vector<SynthesizedPlan>& plans) {
  std::vector<QueryPlan> out;
  for (const auto& p : plans) out.push_back(p.query);
  return out;
}

bool mentions(const PrivacyReport& r, const std::string& tag) {
  for (const auto& v : r.violations) {
    if (v.find(tag) != std::string::npos) return true;
  }
  return false;
}

int count_pairings(const PairingRoster& roster, SubsetMask u, SubsetMask v) {
  int n = 0;
  for (const auto& p : roster.pairings) n += p.u == u && p.v == v;
  return n;
}

}  // namespace

TEST_CASE("pairing roster of the reference scheme, first demand") {
  const auto counts = reference_counts();
  const auto roster = plan_pairings(counts, 0);

  // Two e-singletons at each server serve as sides for the c+e targets.
  CHECK(count_pairings(roster, set1({5}), set1({3})) == 4);
  for (const auto& p : roster.pairings) {
    if (!(p.u == set1({5}) && p.v == set1({3}))) continue;
    REQUIRE(p.targets.size() == 1);
    CHECK(p.targets[0].server != p.side_server);
    CHECK(p.targets[0].message == 2);
  }
  // The b+d symbol at each server is the side of the a+b+c+d target.
  CHECK(count_pairings(roster, set1({2, 4}), set1({1, 3})) == 2);
  for (const auto& p : roster.pairings) {
    if (p.u == set1({2, 4}) && p.v == set1({1, 3})) CHECK(p.targets[0].server != p.side_server);
  }
}

TEST_CASE("no pairings without pairing counts") {
  const auto naive = naive_counts(example_instance());
  for (int j = 0; j < 4; ++j) CHECK(plan_pairings(naive, j).pairings.empty());
}

TEST_CASE("reference scheme, first demand: query table") {
  const auto plan = synthesize(reference_counts(), 0);
  for (int s = 0; s < 2; ++s) {
    CHECK(plan.query.servers[static_cast<std::size_t>(s)].size() == 13);
    CHECK(plan.query.support_counts(s) == fixtures::reference_symbol_counts());
  }
  std::map<int, int> by_size;
  for (const auto& sym : plan.query.servers[0]) ++by_size[static_cast<int>(sym.terms.size())];
  CHECK(by_size == std::map<int, int>{{1, 6}, {2, 4}, {3, 2}, {4, 1}});
  CHECK(replay_symbolically(example_instance(), plan.query, plan.decoding).empty());
}

TEST_CASE("reference scheme, third demand: d5..d8 come from second-round pairings") {
  const auto plan = synthesize(reference_counts(), 2);
  std::set<Subpacket> recovered;
  for (const auto& st : plan.decoding.steps) {
    if (st.kind == StepKind::PairSubtract) continue;
    recovered.insert(st.recovered);
    if (st.recovered.message == 3 && st.recovered.index >= 5) {
      CHECK(st.round == 2);
      CHECK(st.kind == StepKind::CancelKnown);
    }
  }
  std::set<Subpacket> expected;
  for (int m : {2, 3}) {
    for (int i = 1; i <= 8; ++i) expected.insert(Subpacket{m, i});
  }
  CHECK(recovered == expected);
}

TEST_CASE("naive counts give direct reads only") {
  const auto inst = example_instance();
  for (const auto& plan : synthesize_all(naive_counts(inst))) {
    int reads = 0;
    for (const auto& st : plan.decoding.steps) {
      CHECK(st.kind == StepKind::DirectRead);
      ++reads;
    }
    CHECK(reads == inst.demand_size * 2);
    CHECK(replay_symbolically(inst, plan.query, plan.decoding).empty());
  }
}

TEST_CASE("structural privacy of synthesized plans") {
  SUBCASE("reference scheme") {
    const auto counts = reference_counts();
    const auto r = verify_structural_privacy(queries_of(synthesize_all(counts)), counts.t);
    CHECK(r.passed);
  }
  SUBCASE("optimized scheme") {
    const auto counts = optimized_counts(example_instance());
    const auto r = verify_structural_privacy(queries_of(synthesize_all(counts)), counts.t);
    CHECK(r.passed);
  }
  SUBCASE("a duplicated subpacket at one server") {
    auto queries = queries_of(synthesize_all(reference_counts()));
    auto& server = queries[1].servers[0];
    server[1].terms[0] = server[0].terms[0];
    const auto r = verify_structural_privacy(queries);
    CHECK_FALSE(r.passed);
    CHECK(mentions(r, "(b)"));
  }
  SUBCASE("plans with different support counts") {
    auto queries = queries_of(synthesize_all(reference_counts()));
    queries[2].servers[1].pop_back();
    const auto r = verify_structural_privacy(queries);
    CHECK_FALSE(r.passed);
    CHECK(mentions(r, "(a)"));
  }
}

TEST_CASE("synthesis is deterministic") {
  const auto counts = reference_counts();
  const auto a = synthesize_all(counts);
  const auto b = synthesize_all(counts);
  REQUIRE(a.size() == b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    CHECK(plan_digest(a[j]) == plan_digest(b[j]));
    CHECK(render_query_table(a[j].query) == render_query_table(b[j].query));
  }
}

TEST_CASE("replay catches a broken decoding plan") {
  auto plan = synthesize(reference_counts(), 0);
  for (auto& st : plan.decoding.steps) {
    if (st.kind == StepKind::CancelKnown && !st.known.empty()) {
      st.known.pop_back();
      break;
    }
  }
  CHECK_FALSE(replay_symbolically(example_instance(), plan.query, plan.decoding).empty());

  auto dropped = synthesize(reference_counts(), 1);
  dropped.decoding.steps.pop_back();
  CHECK_FALSE(replay_symbolically(example_instance(), dropped.query, dropped.decoding).empty());
}

TEST_CASE("counts violating a quota are refused") {
  auto counts = reference_counts();
  counts.t[set1({1})] += 1;
  CHECK_THROWS_AS(synthesize(counts, 0), SynthesisFailure);
}

TEST_CASE("lifted optimal schemes on random instances replay and stay private") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 12; ++trial) {
    const auto inst = fixtures::random_instance(rng, 4, 6, 3, 5);
    CAPTURE(inst.messages);
    CAPTURE(inst.demand_size);
    CAPTURE(inst.family_size());
    const auto counts = maximize_rate(inst).counts;
    const auto plans = synthesize_all(counts);
    for (const auto& p : plans) CHECK(replay_symbolically(inst, p.query, p.decoding).empty());
    CHECK(verify_structural_privacy(queries_of(plans), counts.t).passed);
  }
}

TEST_CASE("query table rendering") {
  const auto plan = synthesize(reference_counts(), 0);
  const std::string text = render_query_table(plan.query);
  CHECK(text.find("Server 1") != std::string::npos);
  CHECK(text.find("Server 2") != std::string::npos);
  CHECK(text.find("Demand W1, L = 8") == 0);
  CHECK(plan_digest(plan).size() == 16);
}
