// Exit gate: one PASS/FAIL line per acceptance criterion.
#include "rtst/bench.hpp"
#include "rtst/error.hpp"
#include "rtst/generator.hpp"
#include "rtst/oracle.hpp"
#include "rtst/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace rtst;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int n, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %d %s: %s (%s)\n", n, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// Smallest h with 3^h >= n + 1, by repeated multiplication.
unsigned log3_height(std::size_t n) {
  unsigned h = 0;
  for (std::size_t p = 1; p < n + 1; p *= 3) ++h;
  return h;
}

std::size_t width_sum(const FieldSchema& s) {
  std::size_t bits = 0;
  for (const Field& f : s.fields()) bits += f.width_bits;
  return bits;
}

// Result as (id, action) so that a modify that only changes the action shows.
using Seen = std::pair<std::optional<FlowId>, std::string>;

Seen oracle_seen(const OracleTable& o, const Packet& p) {
  const auto m = oracle_classify(o, p);
  return m ? Seen{m->id, m->action} : Seen{std::nullopt, ""};
}

Seen engine_seen(const LookupEngine& e, const Packet& p) {
  const ClassifyResult r = e.classify(p);
  return {r.flow_id, r.flow_id ? r.action : ""};
}

std::vector<std::size_t> changed_per_level(const Rtst& before, const Rtst& after) {
  const std::size_t h = std::max(before.height(), after.height());
  std::vector<std::size_t> out(h, 0);
  for (unsigned lv = 0; lv < h; ++lv) {
    static const std::map<std::uint64_t, NodeSlot> none;
    const auto& a = lv < before.height() ? before.levels()[lv] : none;
    const auto& b = lv < after.height() ? after.levels()[lv] : none;
    for (const auto& [idx, slot] : b) {
      auto it = a.find(idx);
      if (it == a.end() || !(it->second == slot)) ++out[lv];
    }
    for (const auto& [idx, slot] : a)
      if (!b.contains(idx)) ++out[lv];
  }
  return out;
}

// Worst per-level change count over every tree of two engine states.
std::size_t peak_level_change(const LookupEngine& before, const LookupEngine& after) {
  std::size_t peak = 0;
  const Rtst empty_sst(before.schema().sa_width(), 1), empty_dst(before.schema().dst_key_bits(), 1);
  for (std::size_t g = 0; g < after.group_count(); ++g) {
    const bool fresh = g >= before.group_count();
    for (std::size_t c : changed_per_level(fresh ? empty_sst : before.group(g).sst, after.group(g).sst))
      peak = std::max(peak, c);
    for (std::size_t c : changed_per_level(fresh ? empty_dst : before.group(g).dst, after.group(g).dst))
      peak = std::max(peak, c);
  }
  return peak;
}

// Image size from the level maps alone: per level a 4-byte length, then per
// slot two keys of two bounds, two 8-byte payload ids, and a 2-bit valid map.
std::size_t image_formula(const Rtst& t) {
  const std::size_t kb = (t.key_width() + 7) / 8;
  std::size_t total = 0;
  for (unsigned lv = 0; lv < t.levels().size(); ++lv) {
    const auto& m = t.levels()[lv];
    std::size_t len = m.empty() ? 0 : m.rbegin()->first + 1;
    if (lv == 0) len = std::max<std::size_t>(len, t.root_count());
    const std::size_t keys = len * 2 * 2 * kb, ids = len * 2 * 8, bitmap = (2 * len + 7) / 8;
    total += 4 + keys + ids + bitmap;
  }
  return total;
}

void criterion_memory() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  double worst_overhead = 0;
  for (const FieldSchema& s : {FieldSchema::openflow(), FieldSchema::five_tuple()}) {
    GenConfig cfg;
    cfg.schema = s;
    cfg.n_flows = 1024;
    cfg.n_packets = 1000;
    const FlowTable t = generate_table(cfg);
    const Report r = bench(t, generate_packets(cfg, t), {});
    // 356 bits is 44.5 bytes and 104 bits is 13 bytes.
    const double want = s.fields().size() == 15 ? 44.5 : 13.0;
    ok = ok && r.data_bytes_per_flow == want && static_cast<double>(width_sum(s)) / 8.0 == want &&
         r.overhead_bytes_per_flow <= 1.0;
    worst_overhead = std::max(worst_overhead, r.overhead_bytes_per_flow);
    detail += fmt("%zu-bit %.4g B/flow, ", width_sum(s), r.data_bytes_per_flow);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 5.0;
  verdict(1, "memory efficiency", ok, detail + fmt("overhead %.3f B/flow, %.2f s", worst_overhead, secs));
}

void criterion_throughput() {
  const auto t0 = Clock::now();
  GenConfig cfg;
  cfg.n_flows = 1024;
  cfg.n_packets = 10000;
  const FlowTable t = generate_table(cfg);
  const auto pkts = generate_packets(cfg, t);
  BenchOptions opt;
  opt.sim.lanes = 2;
  opt.sim.clock_mhz = 337.0;
  const Report r = bench(t, pkts, opt);
  const double secs = seconds_since(t0);
  const bool ok = r.sim.packets_out == 10000 && r.sim.bubbles == 0 && r.throughput_pkts_per_cycle >= 1.99 &&
                  r.projected_mpps >= 670.0 && r.projected_mpps <= 674.0 && r.mismatches == 0 && secs < 30.0;
  verdict(2, "throughput", ok,
          fmt("%.4f packets/cycle, %.1f MPPS at 337 MHz, %zu mismatches, %.2f s", r.throughput_pkts_per_cycle,
              r.projected_mpps, r.mismatches, secs));
}

void criterion_latency() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::size_t runs = 0, packets = 0, bad_packets = 0;
  std::string means;
  for (std::size_t n : {128, 256, 512, 1024}) {
    GenConfig cfg;
    cfg.n_flows = n;
    cfg.seed = 300 + n;
    cfg.disjoint_sa = true;
    cfg.n_packets = 10000;
    const FlowTable t = generate_table(cfg);
    const auto pkts = generate_packets(cfg, t);
    double prev = 1e9;
    means += fmt("N=%zu:", n);
    for (std::size_t k : {1, 2, 4, 8}) {
      const GroupPlan plan = partition(t, k);
      // Disjoint SAs: each group's SST holds one key per flow and every DST
      // holds a single key.
      std::size_t h_sst = 0;
      for (const auto& g : plan.groups) h_sst = std::max<std::size_t>(h_sst, log3_height(g.size()));
      const std::size_t h_dst = 1;
      const LookupEngine e = LookupEngine::build(t, plan);
      PipelineSim sim(e);
      for (std::size_t i = 0; i < pkts.size(); i += 2) {
        sim.inject_packets(std::span(pkts).subspan(i, std::min<std::size_t>(2, pkts.size() - i)));
        sim.advance();
      }
      sim.drain();
      double sum = 0;
      for (const PacketOutcome& o : sim.outcomes()) {
        bad_packets += o.latency() != h_sst + h_dst + 1;
        sum += static_cast<double>(o.latency());
      }
      packets += sim.outcomes().size();
      ok = ok && sim.outcomes().size() == pkts.size() && e.sst_height() == h_sst && e.dst_height() == h_dst;
      const double mean = sum / static_cast<double>(sim.outcomes().size());
      ok = ok && mean <= prev;
      prev = mean;
      means += fmt(" %.0f", mean);
      ++runs;
    }
    means += "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && bad_packets == 0 && secs < 60.0;
  verdict(3, "latency law", ok,
          fmt("%zu runs, %zu packets, %zu off h_SST+h_DST+1; mean latency by k=1,2,4,8: ", runs, packets,
              bad_packets) +
              means + fmt("%.2f s", secs));
}

void criterion_height() {
  bool ok = true;
  std::size_t worst = 0;
  for (std::size_t n = 1; n <= 500; ++n) {
    std::vector<KeyEntry> keys;
    for (std::size_t i = 0; i < n; ++i) keys.push_back(KeyEntry{Range(Wide(10 * i), Wide(10 * i + 4), 16), i, true});
    const Rtst t = Rtst::build_complete(16, keys);
    const unsigned want = log3_height(n);
    // Count occupied levels and check every level above the last is full.
    std::size_t occupied = 0, stored = 0;
    bool full = true;
    std::size_t cap = 1;
    for (std::size_t lv = 0; lv < t.levels().size(); ++lv, cap *= 3) {
      const auto& m = t.levels()[lv];
      occupied += !m.empty();
      for (const auto& [idx, slot] : m) stored += slot.left.has_value() + slot.right.has_value();
      if (lv + 1 < t.levels().size()) full = full && m.size() == cap;
    }
    const bool good = occupied == want && t.height() == want && full && stored == n;
    if (!good) worst = n;
    ok = ok && good;
  }
  verdict(4, "height law", ok, ok ? "N = 1..500 all match ceil(log3(N+1)) with full upper levels"
                                  : fmt("first failure at N=%zu", worst));
}

// Shared by criteria 5, 6 and 8.
std::vector<LookupEngine> updated_engines;

void criterion_oracle() {
  const auto t0 = Clock::now();
  std::size_t before_bad = 0, after_bad = 0, verdict_bad = 0, checked = 0, accepted = 0, refused = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    GenConfig cfg;
    cfg.n_flows = 1024;
    cfg.seed = 5000 + i;
    cfg.sa_reuse = i % 2 ? 0.25 : 0.0;
    cfg.n_packets = 10000;
    cfg.n_updates = 1000;
    const FlowTable t = generate_table(cfg);
    const auto pkts = generate_packets(cfg, t);
    const auto ops = generate_updates(cfg, t);
    LookupEngine e = LookupEngine::build(t, partition(t));
    OracleTable o(t);
    for (const Packet& p : pkts) before_bad += engine_seen(e, p) != oracle_seen(o, p);
    for (const UpdateOp& op : ops) {
      const UpdateOutcome got = attempt(e, op), want = o.apply(op);
      verdict_bad += !got.same_verdict(want);
      accepted += got.accepted;
      refused += !got.accepted;
    }
    for (const Packet& p : pkts) after_bad += engine_seen(e, p) != oracle_seen(o, p);
    checked += 2 * pkts.size();
    if (i < 5) updated_engines.push_back(std::move(e));
  }
  const double secs = seconds_since(t0);
  const bool ok = before_bad == 0 && after_bad == 0 && verdict_bad == 0 && refused > 0 && accepted > 0;
  verdict(5, "oracle equivalence", ok,
          fmt("20 tables, %zu lookups, %zu/%zu mismatches before/after, %zu accepted and %zu refused ops, "
              "%zu verdict mismatches, %.1f s",
              checked, before_bad, after_bad, accepted, refused, verdict_bad, secs));
}

void criterion_locality() {
  std::size_t inserts = 0, ops_seen = 0, peak = 0, bubble_peak = 0, bubbles = 0, accepted_total = 0;
  bool memory_same = true;
  for (std::uint64_t i = 0; i < 5; ++i) {
    GenConfig cfg;
    cfg.n_flows = 1024;
    cfg.seed = 6000 + i;
    cfg.sa_reuse = i % 2 ? 0.25 : 0.0;
    cfg.n_packets = 4000;
    cfg.n_updates = 1000;
    const FlowTable t = generate_table(cfg);
    const auto ops = generate_updates(cfg, t);

    // Level diffing on whole engine states around every accepted op.
    LookupEngine e = LookupEngine::build(t, partition(t));
    for (const UpdateOp& op : ops) {
      const LookupEngine before = e;
      if (!attempt(e, op).accepted) continue;
      ++ops_seen;
      const std::size_t c = peak_level_change(before, e);
      if (op.kind == UpdateKind::insert) {
        ++inserts;
        peak = std::max(peak, c);
      }
    }

    // The same trace through the simulator as write bubbles.
    LookupEngine s = LookupEngine::build(t, partition(t));
    PipelineSim sim(s, PipelineConfig{.spare_sst_stages = 2, .spare_dst_stages = 2});
    const StreamResult r = run_stream(s, sim, generate_packets(cfg, t), ops);
    for (const auto& u : r.updates) accepted_total += u.accepted;
    bubbles += r.stats.bubbles;
    bubble_peak = std::max<std::size_t>(bubble_peak, r.stats.peak_stage_writes);
    for (std::size_t g = 0; g < s.group_count(); ++g)
      memory_same = memory_same && g < sim.group_count() && sim.sst_memory(g) == s.group(g).sst &&
                    sim.dst_memory(g) == s.group(g).dst;
  }
  const bool ok = inserts > 0 && peak <= 2 && bubble_peak <= 2 && bubbles >= accepted_total && memory_same;
  verdict(6, "update locality", ok,
          fmt("%zu accepted inserts of %zu accepted ops, peak %zu nodes changed per level; %zu bubbles, "
              "peak %zu writes per stage per cycle, simulator memory %s engine",
              inserts, ops_seen, peak, bubbles, bubble_peak, memory_same ? "equals" : "differs from"));
}

void criterion_bubbles() {
  std::size_t mismatches = 0, packets = 0, saw_old = 0, saw_new = 0, verdict_bad = 0, cycle_bad = 0, applied = 0;
  for (std::uint64_t round = 0; round < 100; ++round) {
    std::mt19937_64 rng(7000 + round);
    GenConfig cfg;
    cfg.n_flows = 150;
    cfg.seed = 7000 + round;
    cfg.sa_reuse = 0.3;
    cfg.n_packets = 1500;
    cfg.hit_fraction = 0.9;
    cfg.n_updates = 6;
    const FlowTable t = generate_table(cfg);
    const auto pkts = generate_packets(cfg, t);
    std::vector<UpdateOp> ops = generate_updates(cfg, t);
    // Touch flows the trace actually hits.
    std::vector<FlowId> hot;
    {
      const OracleTable o(t);
      for (std::size_t i = 0; i < pkts.size() && hot.size() < 2; i += 37)
        if (auto m = oracle_classify(o, pkts[i]); m && std::find(hot.begin(), hot.end(), m->id) == hot.end())
          hot.push_back(m->id);
    }
    if (!hot.empty()) {
      Flow f = *t.find(hot[0]);
      f.action = "set:r" + std::to_string(round);
      ops.push_back(UpdateOp{UpdateKind::modify, f, {}});
    }
    if (hot.size() > 1) ops.push_back(UpdateOp{UpdateKind::remove, *t.find(hot[1]), {}});
    std::shuffle(ops.begin(), ops.end(), rng);

    // Distinct random injection cycles inside the packet stream.
    std::vector<std::uint64_t> cycles;
    while (cycles.size() < ops.size()) {
      const std::uint64_t c = 2 + rng() % 700;
      if (std::find(cycles.begin(), cycles.end(), c) == cycles.end()) cycles.push_back(c);
    }
    std::sort(cycles.begin(), cycles.end());
    for (std::size_t j = 0; j < ops.size(); ++j) ops[j].at = cycles[j];

    // Oracle snapshot after each prefix of the trace.
    std::vector<OracleTable> snap{OracleTable(t)};
    std::vector<UpdateOutcome> want;
    for (const UpdateOp& op : ops) {
      OracleTable next = snap.back();
      want.push_back(next.apply(op));
      snap.push_back(std::move(next));
    }

    LookupEngine e = LookupEngine::build(t, partition(t));
    PipelineSim sim(e, PipelineConfig{.spare_sst_stages = 2, .spare_dst_stages = 2});
    const StreamResult r = run_stream(e, sim, pkts, ops);
    for (std::size_t j = 0; j < ops.size(); ++j) {
      verdict_bad += !r.updates[j].same_verdict(want[j]);
      if (r.updates[j].accepted) {
        ++applied;
        cycle_bad += r.update_cycles[j] != ops[j].at;
      }
    }
    for (std::size_t i = 0; i < r.packets.size(); ++i) {
      const PacketOutcome& o = r.packets[i];
      // Updates whose bubble entered before this packet are visible to it.
      std::size_t visible = 0;
      while (visible < ops.size() && *ops[visible].at < o.inject_cycle) ++visible;
      const Packet& p = pkts[i];
      const Seen expect = oracle_seen(snap[visible], p);
      const Seen got{o.flow_id, o.flow_id ? o.action : ""};
      mismatches += got != expect;
      saw_old += visible < ops.size() && expect != oracle_seen(snap.back(), p);
      saw_new += visible > 0 && expect != oracle_seen(snap.front(), p);
      ++packets;
    }
  }
  const bool ok = mismatches == 0 && verdict_bad == 0 && cycle_bad == 0 && saw_old > 0 && saw_new > 0;
  verdict(7, "write-bubble consistency", ok,
          fmt("100 interleavings, %zu packets, %zu applied updates, %zu mismatches; %zu packets rely on "
              "pre-update state and %zu on post-update state",
              packets, applied, mismatches + verdict_bad + cycle_bad, saw_old, saw_new));
}

void criterion_pointer_free() {
  std::vector<const Rtst*> trees;
  std::vector<Rtst> built;
  for (std::size_t n : {1, 2, 8, 9, 26, 27, 100, 500, 1024}) {
    std::vector<KeyEntry> keys;
    for (std::size_t i = 0; i < n; ++i)
      keys.push_back(KeyEntry{Range(Wide(10 * i), Wide(10 * i + 4), 356), i, i % 3 != 0});
    built.push_back(Rtst::build_complete(356, keys));
  }
  for (const Rtst& t : built) trees.push_back(&t);
  for (const LookupEngine& e : updated_engines)
    for (std::size_t g = 0; g < e.group_count(); ++g) {
      trees.push_back(&e.group(g).sst);
      trees.push_back(&e.group(g).dst);
    }
  bool ok = !updated_engines.empty();
  std::size_t bytes = 0;
  for (const Rtst* t : trees) {
    const auto img = t->serialize();
    bytes += img.size();
    ok = ok && img.size() == image_formula(*t);
    ok = ok && Rtst::deserialize(t->key_width(), img) == *t;
  }
  verdict(8, "pointer-freedom", ok,
          fmt("%zu trees, %zu bytes, every image = level lengths + keys + payload ids + valid bitmap and "
              "decodes to the same tree",
              trees.size(), bytes));
}

}  // namespace

int main() {
  try {
    criterion_memory();
    criterion_throughput();
    criterion_latency();
    criterion_height();
    criterion_oracle();
    criterion_locality();
    criterion_bubbles();
    criterion_pointer_free();
  } catch (const std::exception& ex) {
    std::printf("aborted: %s\n", ex.what());
    return 2;
  }
  std::printf("%d of 8 criteria failed\n", failures);
  return failures ? 1 : 0;
}
