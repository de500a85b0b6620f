#pragma once

#include "rtst/error.hpp"
#include "rtst/flow.hpp"
#include "rtst/partition.hpp"
#include "rtst/tree.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rtst {

struct GroupTrace {
  std::size_t group = 0;
  std::vector<TraceStep> sst;
  std::optional<Address> dst_root;
  std::vector<TraceStep> dst;
};

struct ClassifyResult {
  std::optional<FlowId> flow_id;
  std::int64_t priority = 0;
  std::string action;
  // Index of the matched flow record.
  std::optional<Payload> record;
  std::vector<GroupTrace> traces;
};

// Node writes produced by one update, per tree of one group.
struct UpdateEffect {
  std::size_t group = 0;
  bool opened_group = false;
  std::vector<NodeWrite> sst;
  std::vector<NodeWrite> dst;
  Address dst_roots = 0;
};

enum class UpdateKind { modify, remove, insert };

const char* update_kind_name(UpdateKind k) noexcept;

// One line of an update trace. For modify, flow.action is the new action.
// `at` optionally pins the simulator cycle at which the update is injected.
struct UpdateOp {
  UpdateKind kind = UpdateKind::insert;
  Flow flow;
  std::optional<std::uint64_t> at;
};

struct UpdateOutcome {
  bool accepted = false;
  std::optional<ErrorCode> refusal;
  // Conflicting or duplicate stored flow for refusals that name one.
  std::optional<FlowId> other;
  std::string message;

  bool same_verdict(const UpdateOutcome& o) const {
    return accepted == o.accepted && refusal == o.refusal && other == o.other;
  }
};

// k groups, each a source search tree (SST) over SA ranges whose payload is
// the root of a destination search tree (DST) in the group's DST forest.
// There is one DST per distinct SA prefix; DST payloads index an append-only
// table of flow records.
//
// classify() and the other const members may run concurrently; updates need
// exclusive access.
class LookupEngine {
 public:
  struct Group {
    Rtst sst;
    Rtst dst;
    // Live flows per DST root.
    std::unordered_map<Address, std::size_t> live;
  };

  explicit LookupEngine(FieldSchema schema);
  static LookupEngine build(const FlowTable& table, const GroupPlan& plan);

  const FieldSchema& schema() const { return schema_; }
  std::size_t group_count() const { return groups_.size(); }
  const Group& group(std::size_t g) const { return groups_.at(g); }
  unsigned sst_height() const;
  unsigned dst_height() const;
  std::size_t flow_count() const { return live_.size(); }
  const Flow& record(Payload index) const { return records_.at(index); }
  // Live flows ordered by id.
  std::vector<Flow> flows() const;
  MemoryFootprint memory() const;

  ClassifyResult classify(const Packet& pkt, bool with_traces = false) const;

  // Id of a stored flow with identical match fields and priority.
  std::optional<FlowId> f_check(const Flow& f) const;

  UpdateEffect update_modify(const Flow& f, const std::string& new_action);
  UpdateEffect update_delete(const Flow& f);
  // Refuses with Error(conflict) naming the lowest overlapping flow id.
  UpdateEffect update_insert(const Flow& f);
  // Dispatches on op.kind; refusals come back as exceptions.
  UpdateEffect apply(const UpdateOp& op);

 private:
  struct Placement {
    std::size_t group;
    Address root;
    Payload record;
  };

  std::optional<UpdateEffect> try_place(std::size_t g, const Flow& f, Payload record);
  FlowId require(const Flow& f) const;

  FieldSchema schema_;
  std::vector<Group> groups_;
  std::vector<Flow> records_;
  std::map<FlowId, Placement> live_;
};

}  // namespace rtst
