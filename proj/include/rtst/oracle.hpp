#pragma once

#include "rtst/engine.hpp"
#include "rtst/flow.hpp"
#include "rtst/tree.hpp"

#include <optional>
#include <span>
#include <vector>

namespace rtst {

// Brute-force reference. Linear scans only; shares no traversal code with the
// trees.
struct OracleEntry {
  Flow flow;
  bool valid = true;
};

struct OracleMatch {
  FlowId id = 0;
  std::int64_t priority = 0;
  std::string action;

  bool operator==(const OracleMatch&) const = default;
};

class OracleTable {
 public:
  explicit OracleTable(FieldSchema schema) : schema_(std::move(schema)) {}
  explicit OracleTable(const FlowTable& table);

  const FieldSchema& schema() const { return schema_; }
  const std::vector<OracleEntry>& entries() const { return entries_; }
  std::size_t live_count() const;

  // Same verdicts and refusal codes as LookupEngine::apply.
  UpdateOutcome apply(const UpdateOp& op);

 private:
  std::optional<std::size_t> find_rule(const Flow& f) const;

  FieldSchema schema_;
  std::vector<OracleEntry> entries_;
};

std::optional<OracleMatch> oracle_classify(const OracleTable& t, const Packet& pkt);
std::optional<Payload> oracle_search(std::span<const KeyEntry> entries, const Wide& key);
// Lowest id of a live flow that overlaps f.
std::optional<FlowId> oracle_overlap(const OracleTable& t, const Flow& f);

}  // namespace rtst
