#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pssr/core.hpp"
#include "pssr/scheme_program.hpp"

namespace pssr {

/// One subpacket: 0-based message and 1-based subpacket index.
struct Subpacket {
  int message = 0;
  int index = 0;
  auto operator<=>(const Subpacket&) const = default;
};

/// A downloaded {0,1}-combination. Terms are sorted by message.
struct Symbol {
  std::vector<Subpacket> terms;

  SubsetMask support() const;
  bool operator==(const Symbol&) const = default;
};

struct QueryPlan {
  int demand = 0;
  std::int64_t l = 0;
  /// servers[s] is the query for server s (0-based), in download order.
  std::vector<std::vector<Symbol>> servers;

  /// Per-server count of symbols by support.
  std::map<SubsetMask, std::int64_t> support_counts(int server) const;
  bool operator==(const QueryPlan&) const = default;
};

/// A downloaded symbol: server and position within that server's query.
struct SymbolRef {
  int server = 0;
  int position = 0;
  auto operator<=>(const SymbolRef&) const = default;
};

enum class StepKind { DirectRead, PairSubtract, CancelKnown };

std::string to_string(StepKind kind);

/// A decoding action. DirectRead reads `source` and recovers `recovered`.
/// PairSubtract forms virtual symbol `virtual_id` = source - side.
/// CancelKnown subtracts `known` from `source` (or from the virtual symbol
/// `virtual_id` when it is set) and recovers `recovered`.
struct DecodeStep {
  StepKind kind = StepKind::DirectRead;
  int round = 1;
  SymbolRef source;
  SymbolRef side;
  int virtual_id = -1;
  std::vector<Subpacket> known;
  Subpacket recovered;
  bool operator==(const DecodeStep&) const = default;
};

struct DecodingPlan {
  int demand = 0;
  std::int64_t l = 0;
  int virtual_count = 0;
  std::vector<DecodeStep> steps;
  bool operator==(const DecodingPlan&) const = default;
};

/// A side symbol at `side_server` and its N-1 targets. Each target is
/// assigned the message it recovers and the round it runs in; an unmatched
/// target (message -1) is left for filler indexing.
struct PairingInstance {
  SubsetMask u;
  SubsetMask v;
  int side_server = 0;
  struct Target {
    int server = 0;
    int message = -1;
    int round = 0;
  };
  std::vector<Target> targets;
  /// Demand messages in the target support.
  int natural_round = 0;
};

/// A directly downloaded demand-only symbol used to recover `message`.
struct DirectUse {
  int server = 0;
  SubsetMask v;
  int message = 0;
  int round = 0;
};

struct PairingRoster {
  int demand = 0;
  std::vector<PairingInstance> pairings;
  std::vector<DirectUse> direct;
  /// consumption[s][U]: symbols of support U at server s claimed by the
  /// roster (singleton demand reads included).
  std::vector<std::map<SubsetMask, std::int64_t>> consumption;
};

/// Lays out side/target pairings and matches recovery uses to demand-only
/// symbols for demand j. Throws SynthesisFailure when a support is
/// over-consumed or a recovery use has no symbol to draw from.
PairingRoster plan_pairings(const SchemeCounts& counts, int j);

struct SynthesizedPlan {
  QueryPlan query;
  DecodingPlan decoding;
};

/// Assigns subpacket indices round by round and emits the query and the
/// decoding plan. Throws SynthesisFailure naming round, server and support.
SynthesizedPlan assign_indices(const SchemeCounts& counts, int j, const PairingRoster& roster);

/// plan_pairings followed by assign_indices, then a symbolic replay.
SynthesizedPlan synthesize(const SchemeCounts& counts, int j);
std::vector<SynthesizedPlan> synthesize_all(const SchemeCounts& counts);

/// Replays the decoding plan over formal unknowns. Returns the problems
/// found; empty means exactly the D·L demand subpackets are recovered, L/N
/// per message from each server, and nothing else.
std::vector<std::string> replay_symbolically(const DemandInstance& inst, const QueryPlan& query,
                                             const DecodingPlan& decoding);

struct PrivacyReport {
  bool passed = true;
  std::vector<std::string> violations;
};

/// Structural privacy across one plan per demand: identical support
/// multisets equal to T, distinct indices per message and server, and equal
/// distinct-subpacket counts per message.
PrivacyReport verify_structural_privacy(const std::vector<QueryPlan>& plans,
                                        const std::optional<std::map<SubsetMask, std::int64_t>>& expected = std::nullopt);

/// Text table, one column per server, grouped by symbol cardinality.
std::string render_query_table(const QueryPlan& plan);
std::string render_decoding_plan(const DecodingPlan& plan);
/// Short stable digest of a plan pair (FNV-1a over the canonical text).
std::string plan_digest(const SynthesizedPlan& plan);

}  // namespace pssr
