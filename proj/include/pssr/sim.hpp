#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pssr/field.hpp"
#include "pssr/rational.hpp"
#include "pssr/synth.hpp"

namespace pssr {

/// K messages of L field elements each, drawn from a seeded generator.
/// Every server holds this same replica.
class MessageStore {
 public:
  MessageStore(std::uint32_t field_order, int messages, std::int64_t l, std::uint64_t seed);

  const FiniteField& field() const { return field_; }
  int messages() const { return static_cast<int>(data_.size()); }
  std::int64_t l() const { return l_; }
  std::uint64_t seed() const { return seed_; }
  /// Subpacket `index` (1-based) of 0-based message `message`.
  std::uint32_t at(int message, int index) const;

 private:
  FiniteField field_;
  std::int64_t l_;
  std::uint64_t seed_;
  std::vector<std::vector<std::uint32_t>> data_;
};

struct Transcript {
  int demand = 0;
  std::uint32_t field_order = 2;
  std::uint64_t seed = 0;
  /// answers[s][p]: value of symbol p returned by server s.
  std::vector<std::vector<std::uint32_t>> answers;
  std::map<Subpacket, std::uint32_t> recovered;
  /// Symbols downloaded over all servers.
  std::int64_t downloads = 0;
  Rational rate;
};

/// Servers answer the query; the decoder replays the plan in the field.
/// Throws CorrectnessFailure naming the first step whose result differs
/// from the stored subpacket, or when the demand is not fully recovered.
Transcript run_protocol(const DemandInstance& inst, const QueryPlan& query, const DecodingPlan& decoding,
                        const MessageStore& store);

struct PrivacyTestReport {
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  /// Largest pairwise total-variation estimate over servers and demand pairs.
  double max_distance = 0;
  /// Permutation-null mean + 3 standard deviations for that pair.
  double band = 0;
  bool within_band = true;
  int worst_server = 0;
  int worst_pair_a = 0;
  int worst_pair_b = 0;
};

/// Relabels every message's subpacket indices at every server with an
/// independent uniform permutation of [1:L], canonicalizes each query and
/// compares the empirical query distributions across demands.
PrivacyTestReport privacy_relabeling_test(const std::vector<QueryPlan>& plans, std::int64_t trials,
                                          std::uint64_t seed);

struct CampaignFailure {
  int demand = 0;
  std::uint64_t seed = 0;
  std::uint32_t field_order = 0;
  std::string message;
};

struct CampaignSummary {
  std::int64_t runs = 0;
  std::int64_t passed = 0;
  std::int64_t failed = 0;
  /// Realized rate, identical for every run.
  Rational rate;
  bool rate_constant = true;
  /// First failure; the campaign stops there.
  std::optional<CampaignFailure> failure;
};

/// run_protocol over every (demand, seed, field) in the grid.
CampaignSummary fuzz_campaign(const DemandInstance& inst, const std::vector<SynthesizedPlan>& plans,
                              std::uint64_t first_seed, std::uint64_t seed_count,
                              const std::vector<std::uint32_t>& field_orders);

}  // namespace pssr
