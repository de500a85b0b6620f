#include "rtst/partition.hpp"

#include "rtst/error.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace rtst {

Range dst_key(const FieldSchema& schema, const Flow& f) {
  Wide high = 0;
  const auto exact = schema.exact_indices();
  for (std::size_t i = 0; i < exact.size(); ++i) {
    high <<= schema.fields()[exact[i]].width_bits;
    high |= f.exact[i];
  }
  high <<= schema.da_width();
  const Range da = range_from_prefix(f.da);
  return Range(high | da.lo, high | da.hi, schema.dst_key_bits());
}

Wide dst_value(const FieldSchema& schema, const Packet& p) {
  Wide v = 0;
  for (std::size_t idx : schema.exact_indices()) {
    v <<= schema.fields()[idx].width_bits;
    v |= p.values[idx];
  }
  v <<= schema.da_width();
  v |= p.values[schema.da_index()];
  return v;
}

unsigned expected_height(std::size_t n) {
  unsigned h = 0;
  std::size_t cap = 1;  // 3^h
  while (cap < n + 1) {
    cap *= 3;
    ++h;
  }
  return h;
}

namespace {

// Disjoint ranges keyed by lo.
using RangeSet = std::map<Wide, Wide>;

bool fits(const RangeSet& set, const Range& r) {
  auto it = set.upper_bound(r.lo);
  if (it != set.end() && it->first <= r.hi) return false;
  if (it != set.begin() && std::prev(it)->second >= r.lo) return false;
  return true;
}

struct GroupState {
  struct Bucket {
    Wide sa_hi;
    RangeSet dst;
  };
  std::map<Wide, Bucket> buckets;  // by SA lo
  std::vector<FlowId> ids;

  // Returns the bucket with exactly this SA, if any.
  Bucket* same_sa(const Range& sa) {
    auto it = buckets.find(sa.lo);
    return it != buckets.end() && it->second.sa_hi == sa.hi ? &it->second : nullptr;
  }

  bool admits(const Range& sa, const Range& dk) {
    if (Bucket* b = same_sa(sa)) return fits(b->dst, dk);
    auto it = buckets.upper_bound(sa.lo);
    if (it != buckets.end() && it->first <= sa.hi) return false;
    if (it != buckets.begin() && std::prev(it)->second.sa_hi >= sa.lo) return false;
    return true;
  }

  void add(FlowId id, const Range& sa, const Range& dk) {
    Bucket& b = buckets[sa.lo];
    b.sa_hi = sa.hi;
    b.dst.emplace(dk.lo, dk.hi);
    ids.push_back(id);
  }
};

struct Keyed {
  const Flow* flow;
  Range sa;
  Range dk;
};

std::vector<Keyed> ordered(const FlowTable& table) {
  std::vector<Keyed> v;
  v.reserve(table.flows.size());
  for (const Flow& f : table.flows) v.push_back({&f, range_from_prefix(f.sa), dst_key(table.schema, f)});
  std::sort(v.begin(), v.end(), [](const Keyed& a, const Keyed& b) {
    if (a.sa.lo != b.sa.lo) return a.sa.lo < b.sa.lo;
    if (a.sa.hi != b.sa.hi) return a.sa.hi < b.sa.hi;
    return a.flow->id < b.flow->id;
  });
  return v;
}

}  // namespace

GroupPlan partition(const FlowTable& table, std::optional<std::size_t> target_k) {
  table.validate();
  if (target_k && *target_k == 0) {
    if (table.flows.empty()) return {};
    throw Error(ErrorCode::infeasible, "zero groups requested for a non-empty table");
  }
  std::vector<GroupState> groups(target_k.value_or(0));

  for (const Keyed& k : ordered(table)) {
    GroupState* chosen = nullptr;
    if (!target_k) {
      for (GroupState& g : groups)
        if (g.admits(k.sa, k.dk)) {
          chosen = &g;
          break;
        }
      if (!chosen) chosen = &groups.emplace_back();
    } else {
      for (GroupState& g : groups)
        if (g.same_sa(k.sa) && g.admits(k.sa, k.dk)) {
          chosen = &g;
          break;
        }
      if (!chosen)
        for (GroupState& g : groups)
          if (g.admits(k.sa, k.dk) && (!chosen || g.buckets.size() < chosen->buckets.size())) chosen = &g;
      if (!chosen)
        throw Error(ErrorCode::infeasible,
                    "flow " + std::to_string(k.flow->id) + " fits none of the " +
                        std::to_string(*target_k) + " groups",
                    k.flow->id);
    }
    chosen->add(k.flow->id, k.sa, k.dk);
  }

  GroupPlan plan;
  for (GroupState& g : groups) plan.groups.push_back(std::move(g.ids));
  return plan;
}

void validate_plan(const FlowTable& table, const GroupPlan& plan) {
  std::unordered_map<FlowId, const Flow*> by_id;
  for (const Flow& f : table.flows) by_id.emplace(f.id, &f);
  std::unordered_set<FlowId> seen;
  for (const auto& g : plan.groups)
    for (FlowId id : g) {
      if (!by_id.contains(id))
        throw Error(ErrorCode::invalid_argument, "plan names unknown flow " + std::to_string(id), id);
      if (!seen.insert(id).second)
        throw Error(ErrorCode::invalid_argument, "plan lists flow " + std::to_string(id) + " twice", id);
    }
  if (seen.size() != table.flows.size())
    throw Error(ErrorCode::invalid_argument, "plan does not cover every flow");
  for (const auto& g : plan.groups) {
    GroupState state;
    for (FlowId id : g) {
      const Flow& f = *by_id.at(id);
      const Range sa = range_from_prefix(f.sa);
      const Range dk = dst_key(table.schema, f);
      if (!state.admits(sa, dk))
        throw Error(ErrorCode::invalid_argument,
                    "flow " + std::to_string(id) + " is not disjoint from its group", id);
      state.add(id, sa, dk);
    }
  }
}

}  // namespace rtst
