#pragma once

#include "rtst/flow.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace rtst {

// Key searched in the destination tree: every exact field in schema order
// (high bits) followed by the DA field (low bits). Only the DA suffix is
// wildcarded, so a flow maps to one contiguous range.
Range dst_key(const FieldSchema& schema, const Flow& f);

// The packet's point in the same key space.
Wide dst_value(const FieldSchema& schema, const Packet& p);

struct GroupPlan {
  std::vector<std::vector<FlowId>> groups;

  std::size_t k() const { return groups.size(); }
};

// Greedy split into groups of disjoint flows. Flows are taken in (SA lo, SA
// size, id) order. Without a target each flow joins the first group that
// admits it; with a target exactly `target_k` groups are used and each flow
// goes to the group already holding its SA prefix, else to the admitting
// group with the fewest distinct SA prefixes. Throws Error(infeasible) naming
// the first flow that fits nowhere.
GroupPlan partition(const FlowTable& table, std::optional<std::size_t> target_k = std::nullopt);

// Checks the group invariants; throws Error(invalid_argument) on violation.
void validate_plan(const FlowTable& table, const GroupPlan& plan);

// Levels of a complete tree over n elements: smallest h with 3^h >= n + 1.
unsigned expected_height(std::size_t n);

}  // namespace rtst
