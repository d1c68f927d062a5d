#include "pssr/core.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "pssr/errors.hpp"

namespace pssr {

SubsetMask SubsetMask::of(std::initializer_list<int> messages) {
  return from_indices(std::vector<int>(messages));
}

SubsetMask SubsetMask::from_indices(const std::vector<int>& messages) {
  std::uint32_t bits = 0;
  for (int m : messages) {
    if (m < 0 || m >= kMaxMaskBits) throw InvalidInput("message index out of range: " + std::to_string(m));
    bits |= 1u << m;
  }
  return SubsetMask(bits);
}

std::vector<int> SubsetMask::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (std::uint32_t b = bits_; b; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

std::string SubsetMask::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (int m : members()) {
    if (!first) os << ',';
    os << m + 1;
    first = false;
  }
  os << '}';
  return os.str();
}

std::vector<SubsetMask> submasks(SubsetMask of) {
  std::vector<SubsetMask> out;
  out.reserve(std::size_t{1} << of.size());
  for_each_submask(of, [&](SubsetMask s) { out.push_back(s); });
  return out;
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Explicit: return "explicit";
    case FamilyKind::Full: return "full";
    case FamilyKind::Contiguous: return "contiguous";
    case FamilyKind::Partition: return "partition";
  }
  return "explicit";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "explicit") return FamilyKind::Explicit;
  if (name == "full") return FamilyKind::Full;
  if (name == "contiguous") return FamilyKind::Contiguous;
  if (name == "partition") return FamilyKind::Partition;
  throw InvalidInput("family.kind: unknown generator '" + name + "' (expected full|contiguous|partition)");
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

void DemandInstance::validate(int message_cap) const {
  if (servers < 2) throw InvalidInput("servers: need N >= 2, got " + std::to_string(servers));
  if (messages < 3) throw InvalidInput("messages: need K >= 3, got " + std::to_string(messages));
  if (message_cap > kMaxMaskBits) message_cap = kMaxMaskBits;
  if (messages > message_cap) {
    throw InvalidInput("messages: K = " + std::to_string(messages) + " exceeds the cap of " +
                       std::to_string(message_cap));
  }
  if (demand_size < 2 || demand_size > messages - 1) {
    throw InvalidInput("demand_size: need 2 <= D <= K-1, got " + std::to_string(demand_size));
  }
  if (family.size() < 2) throw InvalidInput("family: need at least 2 candidate demand sets");
  std::set<std::uint32_t> seen;
  const SubsetMask all = SubsetMask::full(messages);
  for (std::size_t j = 0; j < family.size(); ++j) {
    const auto& w = family[j];
    if (!w.subset_of(all)) {
      throw InvalidInput("family[" + std::to_string(j) + "]: index outside [1:" + std::to_string(messages) + "]");
    }
    if (w.size() != demand_size) {
      throw InvalidInput("family[" + std::to_string(j) + "]: has " + std::to_string(w.size()) +
                         " elements, expected D = " + std::to_string(demand_size));
    }
    if (!seen.insert(w.bits()).second) {
      throw InvalidInput("family[" + std::to_string(j) + "]: duplicate demand set " + w.to_string());
    }
  }
}

bool DemandInstance::is_normalized() const {
  SubsetMask uni, inter = SubsetMask::full(messages);
  for (const auto& w : family) {
    uni = uni | w;
    inter = inter & w;
  }
  return uni == SubsetMask::full(messages) && inter.empty();
}

NormalizedInstance normalize_instance(const DemandInstance& raw) {
  raw.validate(kMaxMaskBits);
  SubsetMask uni, inter = SubsetMask::full(raw.messages);
  for (const auto& w : raw.family) {
    uni = uni | w;
    inter = inter & w;
  }
  NormalizedInstance out;
  std::vector<int> new_pos(static_cast<std::size_t>(raw.messages), -1);
  for (int m = 0; m < raw.messages; ++m) {
    if (!uni.contains(m)) {
      out.remap.dropped_unused.push_back(m + 1);
    } else if (inter.contains(m)) {
      out.remap.dropped_universal.push_back(m + 1);
    } else {
      new_pos[static_cast<std::size_t>(m)] = static_cast<int>(out.remap.original_index.size());
      out.remap.original_index.push_back(m + 1);
    }
  }
  DemandInstance& inst = out.instance;
  inst.servers = raw.servers;
  inst.messages = static_cast<int>(out.remap.original_index.size());
  inst.demand_size = raw.demand_size - inter.size();
  inst.kind = out.remap.identity() ? raw.kind : FamilyKind::Explicit;
  std::set<std::uint32_t> seen;
  for (const auto& w : raw.family) {
    std::uint32_t bits = 0;
    for (int m : (w - inter).members()) bits |= 1u << new_pos[static_cast<std::size_t>(m)];
    if (seen.insert(bits).second) inst.family.emplace_back(bits);
  }
  if (inst.demand_size < 2 || inst.family.size() < 2 || inst.messages < 3) {
    throw DegenerateInstance("instance is degenerate after normalization (K' = " + std::to_string(inst.messages) +
                             ", D' = " + std::to_string(inst.demand_size) +
                             "); it is trivially solvable outside the balanced linear model");
  }
  inst.validate(kMaxMaskBits);
  return out;
}

DemandInstance generate_family(FamilyKind kind, int servers, int messages, int demand_size) {
  DemandInstance inst;
  inst.servers = servers;
  inst.messages = messages;
  inst.demand_size = demand_size;
  inst.kind = kind;
  if (messages < 1 || messages > kMaxMaskBits || demand_size < 1 || demand_size > messages) {
    throw InvalidInput("generator parameters out of range");
  }
  switch (kind) {
    case FamilyKind::Full:
      for (std::uint32_t b = 1; b < (1u << messages); ++b) {
        if (std::popcount(b) == demand_size) inst.family.emplace_back(b);
      }
      break;
    case FamilyKind::Contiguous:
      for (int start = 0; start + demand_size <= messages; ++start) {
        inst.family.emplace_back(((1u << demand_size) - 1u) << start);
      }
      break;
    case FamilyKind::Partition:
      if (messages % demand_size != 0) {
        throw InvalidInput("partition family requires D | K (K = " + std::to_string(messages) +
                           ", D = " + std::to_string(demand_size) + ")");
      }
      for (int start = 0; start < messages; start += demand_size) {
        inst.family.emplace_back(((1u << demand_size) - 1u) << start);
      }
      break;
    case FamilyKind::Explicit:
      throw InvalidInput("explicit families are not generated");
  }
  std::sort(inst.family.begin(), inst.family.end());
  inst.validate(kMaxMaskBits);
  return inst;
}

std::vector<SubsetMask> enum_V(const DemandInstance& inst, int j, SubsetMask s, int l) {
  std::vector<SubsetMask> out;
  for_each_submask(inst.demand(j) - s, [&](SubsetMask v) {
    if (v.size() == l) out.push_back(v);
  });
  return out;
}

std::vector<SubsetMask> enum_U(const DemandInstance& inst, int j, SubsetMask s, int l) {
  const SubsetMask w = inst.demand(j);
  const SubsetMask avail = SubsetMask::full(inst.messages) - s;
  std::vector<SubsetMask> out;
  for_each_submask(avail, [&](SubsetMask u) {
    if (!u.subset_of(w) && (u & w).size() == l) out.push_back(u);
  });
  return out;
}

std::vector<SubsetMask> enum_U_all(const DemandInstance& inst, int j, SubsetMask s) {
  const SubsetMask w = inst.demand(j);
  const SubsetMask avail = SubsetMask::full(inst.messages) - s;
  std::vector<SubsetMask> out;
  for_each_submask(avail, [&](SubsetMask u) {
    if (!u.subset_of(w) && !w.subset_of(u)) out.push_back(u);
  });
  return out;
}

}  // namespace pssr
