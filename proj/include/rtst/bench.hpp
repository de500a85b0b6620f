#pragma once

#include "rtst/engine.hpp"
#include "rtst/generator.hpp"
#include "rtst/jsonio.hpp"
#include "rtst/pipeline.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rtst {

struct BenchOptions {
  std::optional<std::size_t> target_k;
  PipelineConfig sim;
  // Check every simulated result against LookupEngine::classify.
  bool verify = true;
};

struct Report {
  std::size_t n = 0;
  std::size_t k = 0;
  unsigned header_bits = 0;
  unsigned sst_height = 0;
  unsigned dst_height = 0;
  unsigned latency_cycles = 0;
  double latency_mean = 0.0;
  double throughput_pkts_per_cycle = 0.0;
  double clock_mhz = 0.0;
  double projected_mpps = 0.0;
  double data_bytes_per_flow = 0.0;
  double overhead_bytes_per_flow = 0.0;
  std::size_t packets = 0;
  std::size_t matched = 0;
  // Simulated results that differ from the functional classifier.
  std::size_t mismatches = 0;
  SimStats sim;
};

// Builds the engine and the simulator, streams the trace at full lane rate
// and reports the measured quantities.
Report bench(const FlowTable& table, std::span<const Packet> trace, const BenchOptions& opt);

// Published constants for other schemes (data/reference_schemes.json).
Json reference_schemes();
Json report_to_json(const Report& r);

// One table per n (cfg.n_flows is overridden) and one run per k on it.
std::vector<Report> sweep(const GenConfig& cfg, std::span<const std::size_t> ns, std::span<const std::size_t> ks,
                          const BenchOptions& opt);
std::string sweep_csv(std::span<const Report> rows);

// Runs one update; refusals become outcomes instead of exceptions.
UpdateOutcome attempt(LookupEngine& engine, const UpdateOp& op, UpdateEffect* effect = nullptr);

struct ReplayResult {
  std::vector<UpdateOutcome> outcomes;
  std::vector<UpdateOutcome> oracle_outcomes;
  std::size_t verdict_mismatches = 0;
  // Peak node writes to one level of one tree by a single update.
  std::size_t peak_level_writes = 0;
  std::size_t packets_checked = 0;
  std::size_t classify_mismatches = 0;
};

// Applies the ops in order while mirroring them on an oracle, then checks
// classification of `check` packets against the oracle.
ReplayResult replay_updates(LookupEngine& engine, std::span<const UpdateOp> ops, std::span<const Packet> check);

struct StreamResult {
  // Indexed by packet sequence number.
  std::vector<PacketOutcome> packets;
  std::vector<UpdateOutcome> updates;
  // Cycle at which each accepted update entered the pipeline.
  std::vector<std::optional<std::uint64_t>> update_cycles;
  SimStats stats;
};

// Feeds packets at full lane rate and interleaves updates: each op is applied
// to the engine at its `at` cycle (or evenly spread over the run when absent)
// and its bubbles take one lane in the following cycles.
StreamResult run_stream(LookupEngine& engine, PipelineSim& sim, std::span<const Packet> packets,
                        std::span<const UpdateOp> updates);

}  // namespace rtst
