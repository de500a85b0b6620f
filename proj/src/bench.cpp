#include "rtst/bench.hpp"

#include "reference_schemes.hpp"
#include "rtst/error.hpp"
#include "rtst/oracle.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace rtst {

namespace {

std::vector<PacketOutcome> by_seq(std::vector<PacketOutcome> v) {
  std::sort(v.begin(), v.end(), [](const PacketOutcome& a, const PacketOutcome& b) { return a.seq < b.seq; });
  return v;
}

void feed(PipelineSim& sim, std::span<const Packet> trace) {
  std::size_t next = 0;
  while (next < trace.size()) {
    const std::size_t n = std::min<std::size_t>(sim.free_lanes(), trace.size() - next);
    sim.inject_packets(trace.subspan(next, n));
    next += n;
    sim.advance();
  }
  sim.drain();
}

std::size_t peak_writes(const std::vector<NodeWrite>& writes) {
  std::map<unsigned, std::size_t> per_level;
  std::size_t peak = 0;
  for (const NodeWrite& w : writes) peak = std::max(peak, ++per_level[w.level]);
  return peak;
}

}  // namespace

Report bench(const FlowTable& table, std::span<const Packet> trace, const BenchOptions& opt) {
  const GroupPlan plan = partition(table, opt.target_k);
  const LookupEngine engine = LookupEngine::build(table, plan);
  PipelineSim sim(engine, opt.sim);
  feed(sim, trace);

  Report r;
  r.n = table.flows.size();
  r.k = engine.group_count();
  r.header_bits = table.schema.header_bits();
  r.sst_height = engine.sst_height();
  r.dst_height = engine.dst_height();
  r.latency_cycles = sim.latency();
  r.sim = sim.report();
  r.latency_mean = r.sim.latency_mean;
  r.throughput_pkts_per_cycle = r.sim.throughput;
  r.clock_mhz = r.sim.clock_mhz;
  r.projected_mpps = r.sim.projected_mpps;
  const MemoryFootprint m = engine.memory();
  if (r.n > 0) {
    r.data_bytes_per_flow = m.data_bytes() / static_cast<double>(r.n);
    r.overhead_bytes_per_flow = m.overhead_bytes() / static_cast<double>(r.n);
  }
  r.packets = trace.size();
  const auto outcomes = by_seq(sim.outcomes());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].flow_id) ++r.matched;
    if (opt.verify && engine.classify(trace[i]).flow_id != outcomes[i].flow_id) ++r.mismatches;
  }
  return r;
}

Json reference_schemes() { return Json::parse(kReferenceSchemes); }

Json report_to_json(const Report& r) {
  return Json{{"n", r.n},
              {"k", r.k},
              {"header_bits", r.header_bits},
              {"heights", {{"sst", r.sst_height}, {"dst", r.dst_height}}},
              {"latency_cycles", r.latency_cycles},
              {"latency_mean", r.latency_mean},
              {"resolver_cycles", 1},
              {"throughput_pkts_per_cycle", r.throughput_pkts_per_cycle},
              {"clock_mhz", r.clock_mhz},
              {"projected_mpps", r.projected_mpps},
              {"data_bytes_per_flow", r.data_bytes_per_flow},
              {"overhead_bytes_per_flow", r.overhead_bytes_per_flow},
              {"packets", r.packets},
              {"matched", r.matched},
              {"mismatches", r.mismatches},
              {"sim", stats_to_json(r.sim)},
              {"reference_comparisons", reference_schemes()}};
}

std::vector<Report> sweep(const GenConfig& cfg, std::span<const std::size_t> ns, std::span<const std::size_t> ks,
                          const BenchOptions& opt) {
  std::vector<Report> rows;
  for (std::size_t n : ns) {
    GenConfig c = cfg;
    c.n_flows = n;
    const FlowTable table = generate_table(c);
    const auto packets = generate_packets(c, table);
    for (std::size_t k : ks) {
      BenchOptions o = opt;
      o.target_k = k;
      rows.push_back(bench(table, packets, o));
    }
  }
  return rows;
}

std::string sweep_csv(std::span<const Report> rows) {
  std::ostringstream out;
  out << "n,k,sst_height,dst_height,latency_cycles,latency_mean,throughput,projected_mpps,"
         "data_bytes_per_flow,overhead_bytes_per_flow,mismatches\n";
  for (const Report& r : rows)
    out << r.n << ',' << r.k << ',' << r.sst_height << ',' << r.dst_height << ',' << r.latency_cycles << ','
        << r.latency_mean << ',' << r.throughput_pkts_per_cycle << ',' << r.projected_mpps << ','
        << r.data_bytes_per_flow << ',' << r.overhead_bytes_per_flow << ',' << r.mismatches << '\n';
  return out.str();
}

UpdateOutcome attempt(LookupEngine& engine, const UpdateOp& op, UpdateEffect* effect) {
  UpdateOutcome out;
  try {
    UpdateEffect e = engine.apply(op);
    if (effect) *effect = std::move(e);
    out.accepted = true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::internal) throw;
    out.refusal = e.code();
    if (e.code() == ErrorCode::duplicate || e.code() == ErrorCode::conflict) out.other = e.flow_id();
    out.message = e.what();
  }
  return out;
}

ReplayResult replay_updates(LookupEngine& engine, std::span<const UpdateOp> ops, std::span<const Packet> check) {
  ReplayResult r;
  OracleTable oracle(FlowTable(engine.schema(), engine.flows()));
  for (const UpdateOp& op : ops) {
    UpdateEffect eff;
    const UpdateOutcome got = attempt(engine, op, &eff);
    const UpdateOutcome want = oracle.apply(op);
    if (!got.same_verdict(want)) ++r.verdict_mismatches;
    if (got.accepted) r.peak_level_writes = std::max({r.peak_level_writes, peak_writes(eff.sst), peak_writes(eff.dst)});
    r.outcomes.push_back(got);
    r.oracle_outcomes.push_back(want);
  }
  for (const Packet& p : check) {
    const auto got = engine.classify(p);
    const auto want = oracle_classify(oracle, p);
    const bool same = want ? got.flow_id == want->id && got.action == want->action : !got.flow_id;
    if (!same) ++r.classify_mismatches;
    ++r.packets_checked;
  }
  return r;
}

StreamResult run_stream(LookupEngine& engine, PipelineSim& sim, std::span<const Packet> packets,
                        std::span<const UpdateOp> updates) {
  StreamResult out;
  const unsigned lanes = sim.config().lanes;
  const std::uint64_t span_cycles = (packets.size() + lanes - 1) / lanes;
  std::vector<std::uint64_t> due(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    due[i] = updates[i].at.value_or((i + 1) * span_cycles / (updates.size() + 1));
    if (i > 0) due[i] = std::max(due[i], due[i - 1]);
  }
  const std::uint64_t start = sim.cycle();
  std::size_t pi = 0, ui = 0;
  std::deque<WriteBubble> pending;
  while (pi < packets.size() || ui < updates.size() || !pending.empty() || !sim.idle()) {
    const std::uint64_t now = sim.cycle() - start;
    if (pending.empty() && ui < updates.size() && due[ui] <= now) {
      UpdateEffect eff;
      out.updates.push_back(attempt(engine, updates[ui], &eff));
      out.update_cycles.emplace_back();
      if (out.updates.back().accepted) {
        for (WriteBubble& b : sim.bubbles_for(eff)) pending.push_back(std::move(b));
        out.update_cycles.back() = sim.cycle();
      }
      ++ui;
    }
    if (!pending.empty()) {
      sim.inject_bubble(std::move(pending.front()));
      pending.pop_front();
    }
    const std::size_t n = std::min<std::size_t>(sim.free_lanes(), packets.size() - pi);
    sim.inject_packets(packets.subspan(pi, n));
    pi += n;
    sim.advance();
  }
  out.packets = by_seq(sim.outcomes());
  out.stats = sim.report();
  return out;
}

}  // namespace rtst
