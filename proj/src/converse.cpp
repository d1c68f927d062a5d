#include "pssr/converse.hpp"

#include <algorithm>
#include <map>

#include "pssr/errors.hpp"

namespace pssr {

Rational ordering_value(const DemandInstance& inst, const std::vector<int>& order) {
  Rational total = 0;
  Rational weight = 1;
  SubsetMask covered;
  for (int j : order) {
    const SubsetMask w = inst.demand(j);
    total += weight * (w - covered).size();
    covered = covered | w;
    weight /= inst.servers;
  }
  return total;
}

namespace {

class OrderingSearch {
 public:
  OrderingSearch(const DemandInstance& inst, const ConverseOptions& options, bool use_orbits)
      : inst_(inst), options_(options), use_orbits_(use_orbits), e_(inst.family_size()) {
    // weight_[d] = N^(E-1-d), so every value is an integer scaled by N^(E-1).
    weight_.resize(static_cast<std::size_t>(e_));
    BigInt w = 1;
    for (int d = e_ - 1; d >= 0; --d) {
      weight_[static_cast<std::size_t>(d)] = w;
      w *= inst.servers;
    }
    used_.assign(static_cast<std::size_t>(e_), 0);
  }

  void run() {
    // Greedy completion gives a first incumbent so pruning starts early.
    std::vector<int> order;
    std::vector<char> used(static_cast<std::size_t>(e_), 0);
    SubsetMask covered;
    BigInt value = 0;
    for (int d = 0; d < e_; ++d) {
      int pick = -1;
      int gain = -1;
      for (int j = 0; j < e_; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const int g = (inst_.demand(j) - covered).size();
        if (g > gain) gain = g, pick = j;
      }
      used[static_cast<std::size_t>(pick)] = 1;
      order.push_back(pick);
      value += weight_[static_cast<std::size_t>(d)] * gain;
      covered = covered | inst_.demand(pick);
    }
    best_ = value;
    best_order_ = order;
    have_best_ = true;
    greedy_ = true;

    prefix_.clear();
    dfs(0, SubsetMask(), 0);
  }

  const BigInt& best() const { return best_; }
  const std::vector<int>& best_order() const { return best_order_; }
  std::uint64_t examined() const { return examined_; }

 private:
  // Optimistic value of any completion: largest residual gains placed first,
  // capped by the number of still-uncovered messages.
  BigInt completion_bound(int depth, SubsetMask covered) {
    residual_.clear();
    for (int j = 0; j < e_; ++j) {
      if (!used_[static_cast<std::size_t>(j)]) residual_.push_back((inst_.demand(j) - covered).size());
    }
    std::sort(residual_.begin(), residual_.end(), std::greater<>());
    int left = inst_.messages - covered.size();
    BigInt bound = 0;
    for (std::size_t i = 0; i < residual_.size() && left > 0; ++i) {
      const int g = std::min(residual_[i], left);
      bound += weight_[static_cast<std::size_t>(depth) + i] * g;
      left -= g;
    }
    return bound;
  }

  // Membership pattern of each message in the prefix, as a key per atom.
  std::vector<std::uint64_t> atom_signature(int candidate) const {
    std::map<std::vector<char>, std::uint64_t> counts;
    const SubsetMask w = inst_.demand(candidate);
    for (int m : w.members()) {
      std::vector<char> pattern;
      pattern.reserve(prefix_.size());
      for (int p : prefix_) pattern.push_back(inst_.demand(p).contains(m) ? 1 : 0);
      ++counts[pattern];
    }
    std::vector<std::uint64_t> sig;
    for (const auto& [pattern, c] : counts) {
      std::uint64_t key = 0;
      for (char b : pattern) key = key * 2 + static_cast<std::uint64_t>(b);
      sig.push_back(key);
      sig.push_back(c);
    }
    return sig;
  }

  void visit() {
    ++examined_;
    if (options_.max_permutations != 0 && examined_ > options_.max_permutations) {
      throw BudgetExceeded("permutation search exceeded " + std::to_string(options_.max_permutations) +
                           " orderings");
    }
  }

  void record(const BigInt& value) {
    // Lexicographic DFS: only a strict improvement replaces the incumbent,
    // except that the greedy seed yields to the first equal DFS ordering.
    if (value > best_ || (greedy_ && value == best_)) {
      best_ = value;
      best_order_ = prefix_;
      greedy_ = false;
    }
  }

  void dfs(int depth, SubsetMask covered, const BigInt& value) {
    visit();
    if (depth == e_ || covered.size() == inst_.messages) {
      // Nothing left to cover: the remaining sets add zero in any order.
      const auto saved = prefix_.size();
      for (int j = 0; j < e_; ++j) {
        if (!used_[static_cast<std::size_t>(j)]) prefix_.push_back(j);
      }
      record(value);
      prefix_.resize(saved);
      return;
    }
    if (options_.prune) {
      const BigInt bound = value + completion_bound(depth, covered);
      if (bound < best_ || (bound == best_ && !greedy_)) return;
    }
    std::vector<std::vector<std::uint64_t>> seen;
    for (int j = 0; j < e_; ++j) {
      if (used_[static_cast<std::size_t>(j)]) continue;
      if (use_orbits_) {
        auto sig = atom_signature(j);
        if (std::find(seen.begin(), seen.end(), sig) != seen.end()) continue;
        seen.push_back(std::move(sig));
      }
      const SubsetMask w = inst_.demand(j);
      used_[static_cast<std::size_t>(j)] = 1;
      prefix_.push_back(j);
      dfs(depth + 1, covered | w, value + weight_[static_cast<std::size_t>(depth)] * (w - covered).size());
      prefix_.pop_back();
      used_[static_cast<std::size_t>(j)] = 0;
    }
  }

  const DemandInstance& inst_;
  const ConverseOptions& options_;
  bool use_orbits_;
  int e_;
  std::vector<BigInt> weight_;
  std::vector<char> used_;
  std::vector<int> prefix_;
  std::vector<int> residual_;
  BigInt best_;
  std::vector<int> best_order_;
  bool have_best_ = false;
  bool greedy_ = false;
  std::uint64_t examined_ = 0;
};

}  // namespace

ConverseReport rate_upper_bound(const DemandInstance& inst, const ConverseOptions& options) {
  inst.validate(kMaxMaskBits);
  if (inst.family_size() == 0) throw InvalidInput("empty demand family");
  const bool orbits = options.orbit_reduction && inst.kind == FamilyKind::Full;
  OrderingSearch search(inst, options, orbits);
  search.run();

  ConverseReport report;
  BigInt scale = 1;
  for (int d = 1; d < inst.family_size(); ++d) scale *= inst.servers;
  const Rational best_value = make_rational(search.best(), scale);
  report.rate_upper_bound = Rational(inst.demand_size) / best_value;
  for (int j : search.best_order()) report.witness.push_back(j + 1);
  report.orbit_reduction_used = orbits;
  report.permutations_examined = search.examined();
  return report;
}

SubpacketizationBound subpacketization_lower_bound(int servers, int demand_size, const Rational& rate) {
  if (rate <= 0) throw InvalidInput("rate must be positive, got " + to_string(rate));
  if (servers < 1 || demand_size < 1) throw InvalidInput("servers and demand size must be positive");
  const BigInt n_alpha = BigInt(servers) * rate.get_num();
  const BigInt d_beta = BigInt(demand_size) * rate.get_den();
  SubpacketizationBound out;
  out.value = n_alpha / gcd(n_alpha, d_beta);
  out.divisible_by_servers = out.value % servers == 0;
  return out;
}

}  // namespace pssr
