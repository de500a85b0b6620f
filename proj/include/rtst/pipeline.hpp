#pragma once

#include "rtst/engine.hpp"
#include "rtst/tree.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rtst {

struct BubbleEntry {
  Address address = 0;
  NodeSlot content;
  bool write_enable = true;
};

// Per-stage node writes carried through one group's pipeline in a single
// slot. At most two entries per stage (dual-ported stage memory).
struct WriteBubble {
  std::size_t group = 0;
  // DST forest root count after the update; lets a write land on a new root.
  Address dst_roots = 0;
  // Indexed by stage; SST stages first, then DST stages.
  std::vector<std::vector<BubbleEntry>> stages;
};

struct PipelineConfig {
  unsigned lanes = 2;
  double clock_mhz = 337.0;
  // Extra stages beyond the current tree heights, room for updates that
  // deepen a tree.
  unsigned spare_sst_stages = 0;
  unsigned spare_dst_stages = 0;
  // Cross-group priority resolution.
  unsigned resolver_cycles = 1;
};

struct PacketOutcome {
  std::uint64_t seq = 0;
  std::optional<FlowId> flow_id;
  std::optional<Payload> record;
  std::string action;
  std::uint64_t inject_cycle = 0;
  std::uint64_t exit_cycle = 0;
  // Node reads summed over all groups.
  std::uint64_t sst_reads = 0;
  std::uint64_t dst_reads = 0;

  std::uint64_t latency() const { return exit_cycle - inject_cycle; }
};

struct SimStats {
  std::uint64_t cycles = 0;
  std::uint64_t packets_in = 0;
  std::uint64_t packets_out = 0;
  std::uint64_t bubbles = 0;
  std::uint64_t memory_reads = 0;
  std::uint64_t memory_writes = 0;
  std::uint64_t latency_min = 0;
  std::uint64_t latency_max = 0;
  double latency_mean = 0.0;
  // Packets per cycle between the first and the last exit.
  double throughput = 0.0;
  double clock_mhz = 0.0;
  double projected_mpps = 0.0;
  // Peak accesses seen on one stage memory in one cycle.
  unsigned peak_stage_reads = 0;
  unsigned peak_stage_writes = 0;
  unsigned sst_stages = 0;
  unsigned dst_stages = 0;
  std::size_t groups = 0;

  bool operator==(const SimStats&) const = default;
};

// Cycle model of the multi-pipeline: one pipeline per group, one stage per
// tree level (SST stages then DST stages), two lanes, dual-port stage
// memories, and a resolver after the last stage. All group pipelines see the
// same slot each cycle. The engine must outlive the simulator; flow records
// are read from it at resolution time.
class PipelineSim {
 public:
  static constexpr unsigned kPorts = 2;

  explicit PipelineSim(const LookupEngine& engine, PipelineConfig cfg = {});

  unsigned sst_stages() const { return sst_stages_; }
  unsigned dst_stages() const { return dst_stages_; }
  unsigned depth() const { return sst_stages_ + dst_stages_; }
  unsigned latency() const { return depth() + cfg_.resolver_cycles; }
  std::uint64_t cycle() const { return cycle_; }
  const PipelineConfig& config() const { return cfg_; }

  // Lanes still free in this cycle's input latch.
  unsigned free_lanes() const;
  // Queues packets for the next cycle; returns their sequence numbers.
  std::vector<std::uint64_t> inject_packets(std::span<const Packet> pkts);
  // Takes one lane of this cycle's input latch.
  void inject_bubble(WriteBubble bubble);
  // Splits an engine update into bubbles of at most two writes per stage.
  std::vector<WriteBubble> bubbles_for(const UpdateEffect& effect) const;

  void advance();
  bool idle() const;
  void drain();

  const std::vector<PacketOutcome>& outcomes() const { return outcomes_; }
  SimStats report() const;

  const Rtst& sst_memory(std::size_t g) const { return memory_.at(g).sst; }
  const Rtst& dst_memory(std::size_t g) const { return memory_.at(g).dst; }
  std::size_t group_count() const { return memory_.size(); }

 private:
  struct GroupMemory {
    Rtst sst;
    Rtst dst;
  };
  struct Lane {
    Address address = 1;
    bool ready = false;
    bool in_dst = false;
    std::optional<Address> dst_root;
    std::optional<Payload> record;
  };
  struct Item {
    bool is_bubble = false;
    std::uint64_t seq = 0;
    std::uint64_t inject_cycle = 0;
    Wide sa;
    Wide rest;
    std::vector<Lane> lanes;  // one per group
    std::uint64_t sst_reads = 0;
    std::uint64_t dst_reads = 0;
    WriteBubble bubble;
  };
  using Latch = std::vector<std::optional<Item>>;

  bool step(std::size_t g, unsigned stage, Item& item);
  void retire(Item& item);

  const LookupEngine* engine_;
  PipelineConfig cfg_;
  unsigned sst_stages_;
  unsigned dst_stages_;
  std::vector<GroupMemory> memory_;
  // latches_[s] feeds stage s; the last `resolver_cycles` entries are the
  // resolver.
  std::vector<Latch> latches_;
  std::uint64_t cycle_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<PacketOutcome> outcomes_;
  std::uint64_t packets_in_ = 0;
  std::uint64_t bubbles_ = 0;
  std::uint64_t reads_ = 0;
  std::uint64_t writes_ = 0;
  unsigned peak_reads_ = 0;
  unsigned peak_writes_ = 0;
};

}  // namespace rtst
