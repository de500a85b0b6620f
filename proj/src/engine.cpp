#include "rtst/engine.hpp"

#include "rtst/error.hpp"

#include <algorithm>
#include <unordered_map>

namespace rtst {

const char* update_kind_name(UpdateKind k) noexcept {
  switch (k) {
    case UpdateKind::modify: return "modify";
    case UpdateKind::remove: return "delete";
    case UpdateKind::insert: return "insert";
  }
  return "?";
}

LookupEngine::LookupEngine(FieldSchema schema) : schema_(std::move(schema)) {}

LookupEngine LookupEngine::build(const FlowTable& table, const GroupPlan& plan) {
  table.validate();
  validate_plan(table, plan);
  std::unordered_map<FlowId, const Flow*> by_id;
  for (const Flow& f : table.flows) by_id.emplace(f.id, &f);

  LookupEngine e(table.schema);
  const FieldSchema& schema = e.schema_;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    // SA lo -> (SA range, DST entries)
    std::map<Wide, std::pair<Range, std::vector<KeyEntry>>> buckets;
    for (FlowId id : plan.groups[g]) {
      const Flow& f = *by_id.at(id);
      const Payload rec = e.records_.size();
      e.records_.push_back(f);
      const Range sa = range_from_prefix(f.sa);
      auto& bucket = buckets.try_emplace(sa.lo, sa, std::vector<KeyEntry>{}).first->second;
      bucket.second.push_back({dst_key(schema, f), rec, true});
    }
    Group grp{Rtst(schema.sa_width()), Rtst(schema.dst_key_bits(), 0), {}};
    std::vector<KeyEntry> sst_entries;
    for (auto& [lo, bucket] : buckets) {
      auto& entries = bucket.second;
      std::sort(entries.begin(), entries.end(),
                [](const KeyEntry& a, const KeyEntry& b) { return a.range.lo < b.range.lo; });
      const Address root = grp.dst.add_tree(entries);
      grp.live[root] = entries.size();
      sst_entries.push_back({bucket.first, root, true});
      for (const KeyEntry& k : entries) e.live_[e.records_[k.payload].id] = {g, root, k.payload};
    }
    grp.sst = Rtst::build_complete(schema.sa_width(), sst_entries);
    e.groups_.push_back(std::move(grp));
  }
  return e;
}

unsigned LookupEngine::sst_height() const {
  unsigned h = 0;
  for (const Group& g : groups_) h = std::max(h, g.sst.height());
  return h;
}

unsigned LookupEngine::dst_height() const {
  unsigned h = 0;
  for (const Group& g : groups_) h = std::max(h, g.dst.height());
  return h;
}

std::vector<Flow> LookupEngine::flows() const {
  std::vector<Flow> out;
  out.reserve(live_.size());
  for (const auto& [id, p] : live_) out.push_back(records_[p.record]);
  return out;
}

MemoryFootprint LookupEngine::memory() const {
  MemoryFootprint m;
  for (const Group& g : groups_) {
    m += g.sst.memory();
    m += g.dst.memory();
  }
  return m;
}

ClassifyResult LookupEngine::classify(const Packet& pkt, bool with_traces) const {
  validate_packet(schema_, pkt);
  const Wide sa = pkt.values[schema_.sa_index()];
  const Wide rest = dst_value(schema_, pkt);
  ClassifyResult out;
  const Flow* best = nullptr;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const Group& grp = groups_[g];
    GroupTrace trace{g, {}, std::nullopt, {}};
    SearchResult s = grp.sst.search(sa);
    if (with_traces) trace.sst = std::move(s.trace);
    if (s.payload) {
      trace.dst_root = *s.payload;
      SearchResult d = grp.dst.search(rest, *s.payload);
      if (with_traces) trace.dst = std::move(d.trace);
      if (d.payload) {
        const Flow& f = records_[*d.payload];
        if (!best || f.priority > best->priority || (f.priority == best->priority && f.id < best->id)) {
          best = &f;
          out.record = *d.payload;
        }
      }
    }
    if (with_traces) out.traces.push_back(std::move(trace));
  }
  if (best) {
    out.flow_id = best->id;
    out.priority = best->priority;
    out.action = best->action;
  }
  return out;
}

std::optional<FlowId> LookupEngine::f_check(const Flow& f) const {
  validate_flow(schema_, f);
  const Range sa = range_from_prefix(f.sa);
  const Range dk = dst_key(schema_, f);
  for (const Group& grp : groups_) {
    auto s = grp.sst.locate(sa);
    if (!s || !s->entry.valid) continue;
    auto d = grp.dst.locate(dk, s->entry.payload);
    if (!d || !d->entry.valid) continue;
    const Flow& stored = records_[d->entry.payload];
    if (stored.priority == f.priority) return stored.id;
  }
  return std::nullopt;
}

FlowId LookupEngine::require(const Flow& f) const {
  auto id = f_check(f);
  if (!id) throw Error(ErrorCode::not_found, "no stored flow matches the request", f.id);
  return *id;
}

UpdateEffect LookupEngine::update_modify(const Flow& f, const std::string& new_action) {
  Placement& p = live_.at(require(f));
  Group& grp = groups_[p.group];
  Flow next = records_[p.record];
  next.action = new_action;
  const Payload rec = records_.size();
  records_.push_back(std::move(next));
  UpdateEffect eff{p.group, false, {}, {}, grp.dst.root_count()};
  eff.dst = grp.dst.modify(dst_key(schema_, f), rec, p.root);
  p.record = rec;
  return eff;
}

UpdateEffect LookupEngine::update_delete(const Flow& f) {
  const FlowId id = require(f);
  const Placement p = live_.at(id);
  Group& grp = groups_[p.group];
  UpdateEffect eff{p.group, false, {}, {}, grp.dst.root_count()};
  eff.dst = grp.dst.erase(dst_key(schema_, f), p.root);
  if (--grp.live[p.root] == 0) eff.sst = grp.sst.erase(range_from_prefix(f.sa));
  live_.erase(id);
  return eff;
}

std::optional<UpdateEffect> LookupEngine::try_place(std::size_t g, const Flow& f, Payload rec) {
  Group& grp = groups_[g];
  const Range sa = range_from_prefix(f.sa);
  const Range dk = dst_key(schema_, f);
  UpdateEffect eff{g, false, {}, {}, 0};
  Address root = 0;

  auto existing = grp.sst.locate(sa);
  if (existing && existing->entry.valid) {
    root = existing->entry.payload;
    if (!grp.dst.check_insert(dk, root)) return std::nullopt;
  } else if (existing && grp.dst.check_insert(dk, existing->entry.payload)) {
    // Retired SA prefix whose DST can take the key: revive both.
    root = existing->entry.payload;
    eff.sst = grp.sst.insert(sa, root);
  } else {
    if (!grp.sst.check_insert(sa)) return std::nullopt;
    root = grp.dst.add_tree({});
    eff.sst = grp.sst.insert(sa, root);
  }
  eff.dst = grp.dst.insert(dk, rec, root);
  eff.dst_roots = grp.dst.root_count();
  ++grp.live[root];
  live_[f.id] = {g, root, rec};
  return eff;
}

UpdateEffect LookupEngine::update_insert(const Flow& f) {
  validate_flow(schema_, f);
  if (auto id = f_check(f))
    throw Error(ErrorCode::duplicate, "flow already present as id " + std::to_string(*id), *id);
  if (live_.contains(f.id))
    throw Error(ErrorCode::duplicate, "flow id " + std::to_string(f.id) + " is in use", f.id);
  for (const auto& [id, p] : live_)
    if (overlap_check(f, records_[p.record]))
      throw Error(ErrorCode::conflict, "flow overlaps stored flow " + std::to_string(id), id);

  const Payload rec = records_.size();
  records_.push_back(f);
  for (std::size_t g = 0; g < groups_.size(); ++g)
    if (auto eff = try_place(g, f, rec)) return *eff;

  groups_.push_back(Group{Rtst(schema_.sa_width()), Rtst(schema_.dst_key_bits(), 0), {}});
  auto eff = try_place(groups_.size() - 1, f, rec);
  if (!eff) throw Error(ErrorCode::internal, "flow does not fit an empty group", f.id);
  eff->opened_group = true;
  return *eff;
}

UpdateEffect LookupEngine::apply(const UpdateOp& op) {
  switch (op.kind) {
    case UpdateKind::modify: return update_modify(op.flow, op.flow.action);
    case UpdateKind::remove: return update_delete(op.flow);
    case UpdateKind::insert: return update_insert(op.flow);
  }
  throw Error(ErrorCode::invalid_argument, "unknown update kind");
}

}  // namespace rtst
