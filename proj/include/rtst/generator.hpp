#pragma once

#include "rtst/engine.hpp"
#include "rtst/flow.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rtst {

struct GenConfig {
  std::size_t n_flows = 1024;
  FieldSchema schema = FieldSchema::openflow();
  std::uint64_t seed = 1;
  // Prefix lengths are uniform over [min_prefix, max_prefix], clamped to the
  // field width; no max means the field width.
  unsigned min_prefix = 8;
  std::optional<unsigned> max_prefix;
  std::int64_t max_priority = 1023;
  // SA prefixes pairwise disjoint (a single group always suffices).
  bool disjoint_sa = false;
  // Chance that a flow reuses the SA prefix of an earlier flow. At 0 every
  // flow gets its own SA prefix.
  double sa_reuse = 0.0;

  std::size_t n_packets = 10000;
  // Share of packets drawn inside a random flow; the rest are uniform.
  double hit_fraction = 0.5;

  std::size_t n_updates = 1000;
  // Share of modify/delete requests naming a flow that is not stored.
  double missing_fraction = 0.15;

  // Throws Error(invalid_argument) on an unusable configuration.
  void validate() const;
};

FlowTable generate_table(const GenConfig& cfg);
std::vector<Packet> generate_packets(const GenConfig& cfg, const FlowTable& table);
// Modify, delete and insert requests against `table`, including requests
// that must be refused (missing flows, duplicates, same-priority overlaps).
std::vector<UpdateOp> generate_updates(const GenConfig& cfg, const FlowTable& table);

}  // namespace rtst
