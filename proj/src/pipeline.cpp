#include "rtst/pipeline.hpp"

#include "rtst/error.hpp"
#include "rtst/partition.hpp"

#include <algorithm>
#include <limits>

namespace rtst {

PipelineSim::PipelineSim(const LookupEngine& engine, PipelineConfig cfg)
    : engine_(&engine),
      cfg_(cfg),
      sst_stages_(engine.sst_height() + cfg.spare_sst_stages),
      dst_stages_(engine.dst_height() + cfg.spare_dst_stages) {
  if (cfg_.lanes == 0 || cfg_.lanes > kPorts)
    throw Error(ErrorCode::invalid_argument, "lanes must be 1 or 2");
  if (cfg_.resolver_cycles == 0) throw Error(ErrorCode::invalid_argument, "resolver needs at least one cycle");
  if (!(cfg_.clock_mhz > 0)) throw Error(ErrorCode::invalid_argument, "clock must be positive");
  for (std::size_t g = 0; g < engine.group_count(); ++g)
    memory_.push_back({engine.group(g).sst, engine.group(g).dst});
  latches_.assign(latency(), Latch(cfg_.lanes));
}

unsigned PipelineSim::free_lanes() const {
  unsigned n = 0;
  for (const auto& slot : latches_[0])
    if (!slot) ++n;
  return n;
}

std::vector<std::uint64_t> PipelineSim::inject_packets(std::span<const Packet> pkts) {
  if (pkts.size() > free_lanes())
    throw Error(ErrorCode::capacity, "more packets than free lanes this cycle");
  const FieldSchema& schema = engine_->schema();
  for (const Packet& p : pkts) validate_packet(schema, p);
  std::vector<std::uint64_t> seqs;
  std::size_t next = 0;
  for (auto& slot : latches_[0]) {
    if (next == pkts.size()) break;
    if (slot) continue;
    const Packet& p = pkts[next++];
    Item it;
    it.seq = next_seq_++;
    it.inject_cycle = cycle_;
    it.sa = p.values[schema.sa_index()];
    it.rest = dst_value(schema, p);
    it.lanes.resize(memory_.size());
    slot = std::move(it);
    seqs.push_back(slot->seq);
    ++packets_in_;
  }
  return seqs;
}

void PipelineSim::inject_bubble(WriteBubble bubble) {
  if (bubble.stages.size() > depth())
    throw Error(ErrorCode::invalid_argument, "bubble has more stages than the pipeline");
  bubble.stages.resize(depth());
  const Address roots = bubble.group < memory_.size()
                            ? std::max(bubble.dst_roots, memory_[bubble.group].dst.root_count())
                            : bubble.dst_roots;
  for (unsigned s = 0; s < depth(); ++s) {
    if (bubble.stages[s].size() > kPorts)
      throw Error(ErrorCode::invalid_argument, "bubble carries more than two entries for stage " + std::to_string(s));
    const bool sst = s < sst_stages_;
    const unsigned level = sst ? s : s - sst_stages_;
    const Address base = level_base(level);
    const Address limit = base * ((sst ? 1 : roots) + 1);
    for (const BubbleEntry& e : bubble.stages[s]) {
      if (e.address < base || e.address >= limit)
        throw Error(ErrorCode::invalid_argument,
                    "bubble address " + std::to_string(e.address) + " is not on stage " + std::to_string(s));
      if (e.write_enable && !e.content.left)
        throw Error(ErrorCode::invalid_argument, "bubble entry without a left key");
    }
  }
  if (bubble.group > memory_.size())
    throw Error(ErrorCode::invalid_argument, "bubble names group " + std::to_string(bubble.group) +
                                                 " but only " + std::to_string(memory_.size()) + " exist");
  for (const auto& slot : latches_[0])
    if (slot && slot->is_bubble) throw Error(ErrorCode::capacity, "one bubble per cycle");
  auto free = std::find_if(latches_[0].begin(), latches_[0].end(), [](const auto& slot) { return !slot; });
  if (free == latches_[0].end()) throw Error(ErrorCode::capacity, "no free lane for the bubble");
  if (bubble.group == memory_.size()) {
    // A group opened by an insert starts as an empty pipeline; packets
    // already in flight carry no lane for it.
    memory_.push_back({Rtst(engine_->schema().sa_width()), Rtst(engine_->schema().dst_key_bits(), 0)});
  }
  {
    auto& slot = *free;
    Item it;
    it.is_bubble = true;
    it.inject_cycle = cycle_;
    it.bubble = std::move(bubble);
    slot = std::move(it);
  }
}

std::vector<WriteBubble> PipelineSim::bubbles_for(const UpdateEffect& effect) const {
  std::vector<std::vector<BubbleEntry>> per_stage(depth());
  auto place = [&](const std::vector<NodeWrite>& writes, unsigned offset, unsigned limit, const char* tree) {
    for (const NodeWrite& w : writes) {
      if (w.level >= limit)
        throw Error(ErrorCode::capacity, std::string("update writes ") + tree + " level " +
                                             std::to_string(w.level) + " beyond the pipeline depth");
      per_stage[offset + w.level].push_back({w.address, w.content, true});
    }
  };
  place(effect.sst, 0, sst_stages_, "SST");
  place(effect.dst, sst_stages_, dst_stages_, "DST");

  std::size_t widest = 0;
  for (const auto& s : per_stage) widest = std::max(widest, s.size());
  const std::size_t count = std::max<std::size_t>(1, (widest + kPorts - 1) / kPorts);
  std::vector<WriteBubble> out(count);
  for (std::size_t b = 0; b < count; ++b) {
    out[b].group = effect.group;
    out[b].dst_roots = effect.dst_roots;
    out[b].stages.resize(depth());
    for (unsigned s = 0; s < depth(); ++s)
      for (std::size_t i = b * kPorts; i < std::min(per_stage[s].size(), (b + 1) * kPorts); ++i)
        out[b].stages[s].push_back(per_stage[s][i]);
  }
  return out;
}

// One memory read on group g's stage; returns whether a read happened.
bool PipelineSim::step(std::size_t g, unsigned stage, Item& item) {
  if (g >= item.lanes.size()) return false;
  Lane& ln = item.lanes[g];
  const bool sst = stage < sst_stages_;
  if (!sst && !ln.in_dst) {
    // SST result becomes the DST root; no SST match ends the lane.
    ln.in_dst = true;
    ln.ready = !ln.dst_root.has_value();
    if (ln.dst_root) ln.address = *ln.dst_root;
  }
  if (ln.ready) return false;
  const GroupMemory& mem = memory_[g];
  const unsigned level = sst ? stage : stage - sst_stages_;
  const NodeSlot* n = (sst ? mem.sst : mem.dst).node(level, ln.address);
  if (!n) {
    ln.ready = true;
    return false;
  }
  const Branch b = route(*n, sst ? item.sa : item.rest);
  std::optional<Payload> hit;
  if (b == Branch::match_left) hit = n->left->payload;
  if (b == Branch::match_right) hit = n->right->payload;
  if (hit) {
    ln.ready = true;
    (sst ? ln.dst_root : ln.record) = *hit;
  } else {
    ln.address = child_address(ln.address, b);
  }
  ++(sst ? item.sst_reads : item.dst_reads);
  return true;
}

void PipelineSim::retire(Item& item) {
  if (item.is_bubble) return;
  PacketOutcome o;
  o.seq = item.seq;
  o.inject_cycle = item.inject_cycle;
  o.exit_cycle = cycle_;
  o.sst_reads = item.sst_reads;
  o.dst_reads = item.dst_reads;
  const Flow* best = nullptr;
  for (const Lane& ln : item.lanes) {
    if (!ln.record) continue;
    const Flow& f = engine_->record(*ln.record);
    if (!best || f.priority > best->priority || (f.priority == best->priority && f.id < best->id)) {
      best = &f;
      o.record = ln.record;
    }
  }
  if (best) {
    o.flow_id = best->id;
    o.action = best->action;
  }
  outcomes_.push_back(std::move(o));
}

void PipelineSim::advance() {
  ++cycle_;
  const unsigned d = depth();
  // Reads see the memory as it was at the start of the cycle.
  for (unsigned s = 0; s < d; ++s)
    for (std::size_t g = 0; g < memory_.size(); ++g) {
      unsigned reads = 0;
      for (auto& slot : latches_[s])
        if (slot && !slot->is_bubble && step(g, s, *slot)) ++reads;
      if (reads > kPorts) throw Error(ErrorCode::internal, "stage read ports exceeded");
      peak_reads_ = std::max(peak_reads_, reads);
      reads_ += reads;
    }
  for (unsigned s = 0; s < d; ++s)
    for (auto& slot : latches_[s]) {
      if (!slot || !slot->is_bubble) continue;
      WriteBubble& b = slot->bubble;
      GroupMemory& mem = memory_.at(b.group);
      unsigned writes = 0;
      for (const BubbleEntry& e : b.stages[s]) {
        if (!e.write_enable) continue;
        if (s < sst_stages_) {
          mem.sst.write_node(s, e.address, e.content);
        } else {
          mem.dst.ensure_roots(b.dst_roots);
          mem.dst.write_node(s - sst_stages_, e.address, e.content);
        }
        ++writes;
      }
      if (writes > kPorts) throw Error(ErrorCode::internal, "stage write ports exceeded");
      peak_writes_ = std::max(peak_writes_, writes);
      writes_ += writes;
    }
  // The last latch is the resolver.
  for (auto& slot : latches_.back())
    if (slot) {
      if (slot->is_bubble) ++bubbles_;
      retire(*slot);
    }
  for (std::size_t s = latches_.size() - 1; s > 0; --s) latches_[s] = std::move(latches_[s - 1]);
  latches_[0] = Latch(cfg_.lanes);
}

bool PipelineSim::idle() const {
  for (const Latch& l : latches_)
    for (const auto& slot : l)
      if (slot) return false;
  return true;
}

void PipelineSim::drain() {
  while (!idle()) advance();
}

SimStats PipelineSim::report() const {
  SimStats s;
  s.sst_stages = sst_stages_;
  s.dst_stages = dst_stages_;
  s.groups = memory_.size();
  s.clock_mhz = cfg_.clock_mhz;
  s.packets_in = packets_in_;
  s.packets_out = outcomes_.size();
  s.bubbles = bubbles_;
  s.memory_reads = reads_;
  s.memory_writes = writes_;
  s.cycles = cycle_;
  s.peak_stage_reads = peak_reads_;
  s.peak_stage_writes = peak_writes_;
  if (outcomes_.empty()) return s;
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max(), hi = 0, sum = 0;
  std::uint64_t first = lo, last = 0;
  for (const PacketOutcome& o : outcomes_) {
    lo = std::min(lo, o.latency());
    hi = std::max(hi, o.latency());
    sum += o.latency();
    first = std::min(first, o.exit_cycle);
    last = std::max(last, o.exit_cycle);
  }
  s.latency_min = lo;
  s.latency_max = hi;
  s.latency_mean = static_cast<double>(sum) / static_cast<double>(outcomes_.size());
  s.throughput = static_cast<double>(outcomes_.size()) / static_cast<double>(last - first + 1);
  s.projected_mpps = s.throughput * cfg_.clock_mhz;
  return s;
}

}  // namespace rtst
