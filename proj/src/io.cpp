#include "pssr/io.hpp"

#include <fstream>
#include <sstream>

#include "pssr/errors.hpp"

namespace pssr {

namespace {

const Json& field(const Json& doc, const char* name, const std::string& where) {
  if (!doc.is_object()) throw InvalidInput(where + ": expected an object");
  auto it = doc.find(name);
  if (it == doc.end()) throw InvalidInput(where + ": missing field '" + name + "'");
  return *it;
}

int int_field(const Json& doc, const char* name, const std::string& where) {
  const Json& v = field(doc, name, where);
  if (!v.is_number_integer()) throw InvalidInput(where + ": field '" + std::string(name) + "' must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < -(1LL << 31) || x >= (1LL << 31)) throw InvalidInput(where + ": field '" + name + "' out of range");
  return static_cast<int>(x);
}

std::int64_t count_field(const Json& doc, const char* name, const std::string& where) {
  const Json& v = field(doc, name, where);
  if (!v.is_number_integer()) throw InvalidInput(where + ": field '" + std::string(name) + "' must be an integer");
  return v.get<std::int64_t>();
}

SubsetMask mask_from_json(const Json& v, int messages, const std::string& where) {
  if (!v.is_array()) throw InvalidInput(where + ": expected an array of 1-based message indices");
  std::vector<int> idx;
  for (const auto& x : v) {
    if (!x.is_number_integer()) throw InvalidInput(where + ": message indices must be integers");
    const auto i = x.get<std::int64_t>();
    if (i < 1 || i > messages) {
      throw InvalidInput(where + ": message index " + std::to_string(i) + " outside [1:" + std::to_string(messages) + "]");
    }
    idx.push_back(static_cast<int>(i - 1));
  }
  const SubsetMask m = SubsetMask::from_indices(idx);
  if (m.size() != static_cast<int>(idx.size())) throw InvalidInput(where + ": repeated message index");
  return m;
}

Json mask_to_json(SubsetMask m) {
  Json a = Json::array();
  for (int i : m.members()) a.push_back(i + 1);
  return a;
}

}  // namespace

DemandInstance instance_from_json(const Json& doc) {
  const std::string where = "instance";
  DemandInstance inst;
  inst.servers = int_field(doc, "servers", where);
  inst.messages = int_field(doc, "messages", where);
  inst.demand_size = int_field(doc, "demand_size", where);
  if (inst.messages < 1 || inst.messages > kMaxMaskBits) {
    throw InvalidInput(where + ": field 'messages' must lie in [1:" + std::to_string(kMaxMaskBits) + "]");
  }
  const Json& fam = field(doc, "family", where);
  if (fam.is_object()) {
    const Json& kind = field(fam, "kind", "instance.family");
    if (!kind.is_string()) throw InvalidInput("instance.family: field 'kind' must be a string");
    const FamilyKind k = family_kind_from_string(kind.get<std::string>());
    if (k == FamilyKind::Explicit) throw InvalidInput("instance.family: use an array for explicit families");
    return generate_family(k, inst.servers, inst.messages, inst.demand_size);
  }
  if (!fam.is_array()) throw InvalidInput(where + ": field 'family' must be an array or a generator object");
  for (std::size_t j = 0; j < fam.size(); ++j) {
    inst.family.push_back(mask_from_json(fam[j], inst.messages, "instance.family[" + std::to_string(j) + "]"));
  }
  inst.kind = FamilyKind::Explicit;
  inst.validate(kMaxMaskBits);
  const auto tag = doc.find("family_kind");
  if (tag != doc.end()) {
    if (!tag->is_string()) throw InvalidInput(where + ": field 'family_kind' must be a string");
    const FamilyKind k = family_kind_from_string(tag->get<std::string>());
    if (k != FamilyKind::Explicit) {
      if (generate_family(k, inst.servers, inst.messages, inst.demand_size).family != inst.family) {
        throw InvalidInput(where + ": field 'family_kind' does not match the listed family");
      }
      inst.kind = k;
    }
  }
  return inst;
}

Json instance_to_json(const DemandInstance& inst) {
  Json doc;
  doc["servers"] = inst.servers;
  doc["messages"] = inst.messages;
  doc["demand_size"] = inst.demand_size;
  Json fam = Json::array();
  for (const auto& w : inst.family) fam.push_back(mask_to_json(w));
  doc["family"] = fam;
  doc["family_kind"] = to_string(inst.kind);
  return doc;
}

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(origin + ": " + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << doc.dump(2) << "\n";
}

std::string dump(const Json& doc) { return doc.dump(); }

Json remap_to_json(const IndexRemap& remap) {
  Json doc;
  doc["original_index"] = remap.original_index;
  doc["dropped_unused"] = remap.dropped_unused;
  doc["dropped_universal"] = remap.dropped_universal;
  return doc;
}

Json counts_to_json(const SchemeCounts& c) {
  Json doc;
  doc["L"] = c.l;
  doc["T_total"] = c.t_total();
  doc["rate"] = to_string(c.rate());
  Json t = Json::array();
  for (const auto& [u, v] : c.t) t.push_back({{"support", mask_to_json(u)}, {"count", v}});
  doc["T"] = t;
  Json i = Json::array();
  for (const auto& [k, v] : c.i) {
    i.push_back({{"demand", k.j + 1}, {"U", mask_to_json(k.u)}, {"V", mask_to_json(k.v)}, {"count", v}});
  }
  doc["I"] = i;
  Json j = Json::array();
  for (const auto& [k, v] : c.j) {
    j.push_back({{"demand", k.j + 1}, {"V", mask_to_json(k.v)}, {"message", k.message + 1}, {"round", k.round},
                 {"count", v}});
  }
  doc["J"] = j;
  return doc;
}

SchemeCounts counts_from_json(const DemandInstance& inst, const Json& doc) {
  const std::string where = "counts";
  SchemeCounts c;
  c.instance = inst;
  c.l = count_field(doc, "L", where);
  auto entries = [&](const char* name) -> const Json& {
    const Json& a = field(doc, name, where);
    if (!a.is_array()) throw InvalidInput(where + ": field '" + std::string(name) + "' must be an array");
    return a;
  };
  const Json& t = entries("T");
  for (std::size_t x = 0; x < t.size(); ++x) {
    const std::string w = "counts.T[" + std::to_string(x) + "]";
    const SubsetMask u = mask_from_json(field(t[x], "support", w), inst.messages, w + ".support");
    const auto v = count_field(t[x], "count", w);
    if (u.empty()) throw InvalidInput(w + ": empty support");
    if (c.t.count(u)) throw InvalidInput(w + ": support listed twice");
    if (v != 0) c.t[u] = v;
  }
  auto demand_of = [&](const Json& e, const std::string& w) {
    const int j = int_field(e, "demand", w);
    if (j < 1 || j > inst.family_size()) throw InvalidInput(w + ": demand index out of range");
    return j - 1;
  };
  if (doc.contains("I")) {
    const Json& i = entries("I");
    for (std::size_t x = 0; x < i.size(); ++x) {
      const std::string w = "counts.I[" + std::to_string(x) + "]";
      PairKey k{demand_of(i[x], w), mask_from_json(field(i[x], "U", w), inst.messages, w + ".U"),
                mask_from_json(field(i[x], "V", w), inst.messages, w + ".V")};
      const auto v = count_field(i[x], "count", w);
      if (v != 0) c.i[k] = v;
    }
  }
  if (doc.contains("J")) {
    const Json& j = entries("J");
    for (std::size_t x = 0; x < j.size(); ++x) {
      const std::string w = "counts.J[" + std::to_string(x) + "]";
      RecoveryKey k{demand_of(j[x], w), mask_from_json(field(j[x], "V", w), inst.messages, w + ".V"),
                    int_field(j[x], "message", w) - 1, int_field(j[x], "round", w)};
      const auto v = count_field(j[x], "count", w);
      if (v != 0) c.j[k] = v;
    }
  }
  return c;
}

Json converse_to_json(const ConverseReport& r) {
  Json doc;
  doc["rate"] = to_string(r.rate_upper_bound);
  doc["witness"] = r.witness;
  doc["orbit_reduction"] = r.orbit_reduction_used;
  doc["orderings_examined"] = r.permutations_examined;
  return doc;
}

namespace {

Json ref_json(const SymbolRef& r) { return Json::array({r.server + 1, r.position + 1}); }

SymbolRef ref_from(const Json& v, const std::string& w) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw InvalidInput(w + ": expected [server, position]");
  }
  return SymbolRef{v[0].get<int>() - 1, v[1].get<int>() - 1};
}

Json sub_json(const Subpacket& s) { return Json::array({s.message + 1, s.index}); }

Subpacket sub_from(const Json& v, const std::string& w) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw InvalidInput(w + ": expected [message, subpacket]");
  }
  return Subpacket{v[0].get<int>() - 1, v[1].get<int>()};
}

StepKind kind_from(const std::string& s, const std::string& w) {
  for (StepKind k : {StepKind::DirectRead, StepKind::PairSubtract, StepKind::CancelKnown}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidInput(w + ": unknown step kind '" + s + "'");
}

}  // namespace

Json plan_to_json(const SynthesizedPlan& plan) {
  Json doc;
  doc["demand"] = plan.query.demand + 1;
  doc["L"] = plan.query.l;
  Json servers = Json::array();
  for (const auto& list : plan.query.servers) {
    Json q = Json::array();
    for (const auto& s : list) {
      Json terms = Json::array();
      for (const auto& t : s.terms) terms.push_back(sub_json(t));
      q.push_back(terms);
    }
    servers.push_back(q);
  }
  doc["queries"] = servers;
  doc["virtual_symbols"] = plan.decoding.virtual_count;
  Json steps = Json::array();
  for (const auto& st : plan.decoding.steps) {
    Json s;
    s["kind"] = to_string(st.kind);
    s["round"] = st.round;
    if (st.kind == StepKind::PairSubtract) {
      s["target"] = ref_json(st.source);
      s["side"] = ref_json(st.side);
      s["virtual"] = st.virtual_id;
    } else {
      if (st.virtual_id >= 0) {
        s["virtual"] = st.virtual_id;
      } else {
        s["symbol"] = ref_json(st.source);
      }
      if (st.kind == StepKind::CancelKnown) {
        Json k = Json::array();
        for (const auto& t : st.known) k.push_back(sub_json(t));
        s["known"] = k;
      }
      s["recovers"] = sub_json(st.recovered);
    }
    steps.push_back(s);
  }
  doc["decoding"] = steps;
  doc["digest"] = plan_digest(plan);
  return doc;
}

SynthesizedPlan plan_from_json(const Json& doc) {
  const std::string where = "plan";
  SynthesizedPlan p;
  p.query.demand = int_field(doc, "demand", where) - 1;
  p.decoding.demand = p.query.demand;
  p.query.l = count_field(doc, "L", where);
  p.decoding.l = p.query.l;
  const Json& servers = field(doc, "queries", where);
  if (!servers.is_array()) throw InvalidInput(where + ": 'queries' must be an array");
  for (std::size_t s = 0; s < servers.size(); ++s) {
    std::vector<Symbol> list;
    for (std::size_t x = 0; x < servers[s].size(); ++x) {
      const std::string w = where + ".queries[" + std::to_string(s) + "][" + std::to_string(x) + "]";
      Symbol sym;
      for (const auto& t : servers[s][x]) sym.terms.push_back(sub_from(t, w));
      list.push_back(std::move(sym));
    }
    p.query.servers.push_back(std::move(list));
  }
  p.decoding.virtual_count = int_field(doc, "virtual_symbols", where);
  const Json& steps = field(doc, "decoding", where);
  if (!steps.is_array()) throw InvalidInput(where + ": 'decoding' must be an array");
  for (std::size_t x = 0; x < steps.size(); ++x) {
    const std::string w = where + ".decoding[" + std::to_string(x) + "]";
    const Json& s = steps[x];
    DecodeStep st;
    const Json& kind = field(s, "kind", w);
    if (!kind.is_string()) throw InvalidInput(w + ": 'kind' must be a string");
    st.kind = kind_from(kind.get<std::string>(), w);
    st.round = int_field(s, "round", w);
    if (st.kind == StepKind::PairSubtract) {
      st.source = ref_from(field(s, "target", w), w + ".target");
      st.side = ref_from(field(s, "side", w), w + ".side");
      st.virtual_id = int_field(s, "virtual", w);
    } else {
      if (s.contains("virtual")) {
        st.virtual_id = int_field(s, "virtual", w);
      } else {
        st.source = ref_from(field(s, "symbol", w), w + ".symbol");
      }
      if (s.contains("known")) {
        for (const auto& k : s["known"]) st.known.push_back(sub_from(k, w + ".known"));
      }
      st.recovered = sub_from(field(s, "recovers", w), w + ".recovers");
    }
    p.decoding.steps.push_back(st);
  }
  return p;
}

Json campaign_to_json(const CampaignSummary& s, const DemandInstance& inst) {
  Json doc;
  doc["runs"] = s.runs;
  doc["passed"] = s.passed;
  doc["failed"] = s.failed;
  doc["realized_rate"] = s.runs > s.failed ? Json(to_string(s.rate)) : Json(nullptr);
  doc["rate_constant"] = s.rate_constant;
  if (s.failure) {
    doc["failure"] = {{"instance", instance_to_json(inst)},
                      {"demand", s.failure->demand + 1},
                      {"seed", s.failure->seed},
                      {"field_order", s.failure->field_order},
                      {"message", s.failure->message}};
  }
  return doc;
}

Json privacy_test_to_json(const PrivacyTestReport& r) {
  Json doc;
  doc["trials"] = r.trials;
  doc["seed"] = r.seed;
  // Empirical statistics, not rates.
  doc["max_total_variation"] = r.max_distance;
  doc["null_band_3sigma"] = r.band;
  doc["within_band"] = r.within_band;
  doc["worst"] = {{"server", r.worst_server + 1}, {"demands", {r.worst_pair_a + 1, r.worst_pair_b + 1}}};
  return doc;
}

}  // namespace pssr
