#include <doctest.h>

#include <random>

#include "pssr/core.hpp"
#include "pssr/errors.hpp"

using namespace pssr;

namespace {

// Sets given with 1-based indices.
SubsetMask set1(std::initializer_list<int> one_based) {
  std::vector<int> v;
  for (int i : one_based) v.push_back(i - 1);
  return SubsetMask::from_indices(v);
}

DemandInstance example_instance() {
  DemandInstance inst;
  inst.servers = 2;
  inst.messages = 5;
  inst.demand_size = 2;
  inst.family = {set1({1, 3}), set1({2, 3}), set1({3, 4}), set1({4, 5})};
  return inst;
}

}  // namespace

TEST_CASE("subset mask algebra") {
  const auto a = set1({1, 3, 5});
  const auto b = set1({3, 4});
  CHECK(a.size() == 3);
  CHECK((a | b) == set1({1, 3, 4, 5}));
  CHECK((a & b) == set1({3}));
  CHECK((a - b) == set1({1, 5}));
  CHECK(set1({3}).subset_of(a));
  CHECK_FALSE(b.subset_of(a));
  CHECK(a.to_string() == "{1,3,5}");
  CHECK(a.members() == std::vector<int>{0, 2, 4});
  CHECK(submasks(set1({1, 2})).size() == 4);
  CHECK(SubsetMask::full(24).size() == 24);
}

TEST_CASE("normalization keeps an already normalized instance") {
  const auto inst = example_instance();
  const auto n = normalize_instance(inst);
  CHECK(n.instance == inst);
  CHECK(n.remap.identity());
  CHECK(n.remap.original_index == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("normalization drops an unused index") {
  auto inst = example_instance();
  inst.messages = 6;
  const auto n = normalize_instance(inst);
  CHECK(n.instance.messages == 5);
  CHECK(n.instance.demand_size == 2);
  CHECK(n.remap.dropped_unused == std::vector<int>{6});
  CHECK(n.instance.family == example_instance().family);
}

TEST_CASE("normalization drops unused and universal indices with renumbering") {
  DemandInstance inst;
  inst.servers = 3;
  inst.messages = 7;
  inst.demand_size = 3;
  inst.family = {set1({2, 4, 7}), set1({4, 5, 7}), set1({2, 5, 7})};
  const auto n = normalize_instance(inst);
  CHECK(n.remap.dropped_unused == std::vector<int>{1, 3, 6});
  CHECK(n.remap.dropped_universal == std::vector<int>{7});
  CHECK(n.remap.original_index == std::vector<int>{2, 4, 5});
  CHECK(n.instance.messages == 3);
  CHECK(n.instance.demand_size == 2);
  CHECK(n.instance.family == std::vector<SubsetMask>{set1({1, 2}), set1({2, 3}), set1({1, 3})});
  CHECK(n.instance.is_normalized());
}

TEST_CASE("normalization rejects degenerate instances") {
  DemandInstance inst;
  inst.servers = 2;
  inst.messages = 3;
  inst.demand_size = 2;
  inst.family = {set1({1, 2}), set1({1, 3})};
  CHECK_THROWS_AS(normalize_instance(inst), DegenerateInstance);
}

TEST_CASE("shape validation names the field") {
  auto inst = example_instance();
  inst.family.push_back(set1({1, 3}));
  CHECK_THROWS_WITH_AS(inst.validate(), doctest::Contains("duplicate"), InvalidInput);
  inst = example_instance();
  inst.family[0] = set1({1, 2, 3});
  CHECK_THROWS_WITH_AS(inst.validate(), doctest::Contains("family[0]"), InvalidInput);
  inst = example_instance();
  inst.servers = 1;
  CHECK_THROWS_WITH_AS(inst.validate(), doctest::Contains("servers"), InvalidInput);
  inst = example_instance();
  inst.messages = 25;
  CHECK_THROWS_WITH_AS(inst.validate(), doctest::Contains("cap"), InvalidInput);
}

TEST_CASE("family generators") {
  CHECK(generate_family(FamilyKind::Full, 2, 5, 2).family.size() == 10);
  CHECK(generate_family(FamilyKind::Contiguous, 2, 5, 2).family ==
        std::vector<SubsetMask>{set1({1, 2}), set1({2, 3}), set1({3, 4}), set1({4, 5})});
  CHECK(generate_family(FamilyKind::Partition, 2, 4, 2).family == std::vector<SubsetMask>{set1({1, 2}), set1({3, 4})});
  CHECK_THROWS_AS(generate_family(FamilyKind::Partition, 2, 5, 2), InvalidInput);
  for (auto kind : {FamilyKind::Full, FamilyKind::Contiguous, FamilyKind::Partition}) {
    for (int k = 4; k <= 8; ++k) {
      for (int d = 2; 2 * d <= k; ++d) {
        if (kind == FamilyKind::Partition && k % d != 0) continue;
        const auto inst = generate_family(kind, 2, k, d);
        const auto n = normalize_instance(inst);
        CHECK(n.instance == inst);
      }
    }
  }
}

TEST_CASE("enum_V examples") {
  const auto inst = example_instance();
  CHECK(enum_V(inst, 0, set1({1}), 1) == std::vector<SubsetMask>{set1({3})});
  CHECK(enum_V(inst, 0, SubsetMask(), 2) == std::vector<SubsetMask>{set1({1, 3})});
  CHECK(enum_V(inst, 0, set1({1, 3}), 1).empty());
}

TEST_CASE("enum_U examples against brute force") {
  const auto inst = example_instance();
  const auto u0 = enum_U(inst, 0, set1({1, 3}), 0);
  CHECK(u0.size() == 7);
  for (auto u : u0) CHECK(u.subset_of(set1({2, 4, 5})));
  const auto u1 = enum_U(inst, 0, set1({3}), 1);
  for (auto u : u1) {
    CHECK(u.contains(0));
    CHECK_FALSE(u.contains(2));
    CHECK_FALSE((u & set1({2, 4, 5})).empty());
  }
  CHECK(u1.size() == 7);
  for (int l = 0; l < 2; ++l) CHECK(enum_U(inst, 0, SubsetMask::full(5), l).empty());
}

TEST_CASE("enumerators partition and respect their definitions") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 4 + static_cast<int>(rng() % 4);
    const int d = 2 + static_cast<int>(rng() % (k - 3));
    const auto inst = generate_family(FamilyKind::Full, 2, k, d);
    const int j = static_cast<int>(rng() % inst.family.size());
    const SubsetMask s(rng() & SubsetMask::full(k).bits());
    const SubsetMask w = inst.demand(j);
    std::size_t total = 0;
    for (int l = 1; l <= d; ++l) {
      const auto vs = enum_V(inst, j, s, l);
      CHECK(std::is_sorted(vs.begin(), vs.end()));
      for (auto v : vs) {
        CHECK(v.subset_of(w - s));
        CHECK(v.size() == l);
      }
      total += vs.size();
    }
    CHECK(total == (std::size_t{1} << (w - s).size()) - 1);
    std::size_t all_u = 0;
    for (int l = 0; l < d; ++l) {
      const auto us = enum_U(inst, j, s, l);
      CHECK(std::is_sorted(us.begin(), us.end()));
      for (auto u : us) {
        CHECK_FALSE(u.subset_of(w));
        CHECK((u & s).empty());
        CHECK((u & w).size() == l);
      }
      all_u += us.size();
    }
    // Brute force: subsets of the complement of s not inside W_j.
    std::size_t expect = 0;
    for (std::uint32_t b = 1; b < (1u << k); ++b) {
      const SubsetMask u(b);
      if ((u & s).empty() && !u.subset_of(w) && (u & w) != w) ++expect;
    }
    CHECK(all_u == expect);
    CHECK(enum_U_all(inst, j, s).size() == expect);
  }
}

TEST_CASE("binomial") {
  CHECK(binomial(5, 2) == 10);
  CHECK(binomial(24, 12) == 2704156);
  CHECK(binomial(3, 4) == 0);
}
