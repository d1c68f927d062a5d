#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pssr/converse.hpp"
#include "pssr/core.hpp"
#include "pssr/scheme_program.hpp"
#include "pssr/sim.hpp"
#include "pssr/synth.hpp"

namespace pssr {

using Json = nlohmann::ordered_json;

/// Instance document: servers, messages, demand_size and a family given
/// either as arrays of 1-based indices or as {"kind": full|contiguous|partition}.
/// Throws InvalidInput naming the offending field.
DemandInstance instance_from_json(const Json& doc);
Json instance_to_json(const DemandInstance& inst);

/// Reads a file and parses it; syntax errors carry line and column.
Json read_json_file(const std::string& path);
Json parse_json_text(const std::string& text, const std::string& origin);
void write_json_file(const std::string& path, const Json& doc);

Json remap_to_json(const IndexRemap& remap);

/// Counts tables with 1-based message numbers; L, T, I and J.
Json counts_to_json(const SchemeCounts& counts);
SchemeCounts counts_from_json(const DemandInstance& inst, const Json& doc);

Json converse_to_json(const ConverseReport& report);

Json plan_to_json(const SynthesizedPlan& plan);
SynthesizedPlan plan_from_json(const Json& doc);

Json campaign_to_json(const CampaignSummary& summary, const DemandInstance& inst);
Json privacy_test_to_json(const PrivacyTestReport& report);

/// Canonical serialization used for round-trip comparisons.
std::string dump(const Json& doc);

}  // namespace pssr
