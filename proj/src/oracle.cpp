#include "rtst/oracle.hpp"

#include "rtst/error.hpp"

namespace rtst {

OracleTable::OracleTable(const FlowTable& table) : schema_(table.schema) {
  for (const Flow& f : table.flows) entries_.push_back({f, true});
}

std::size_t OracleTable::live_count() const {
  std::size_t n = 0;
  for (const OracleEntry& e : entries_) n += e.valid ? 1 : 0;
  return n;
}

std::optional<std::size_t> OracleTable::find_rule(const Flow& f) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].valid && entries_[i].flow.same_rule(f)) return i;
  return std::nullopt;
}

UpdateOutcome OracleTable::apply(const UpdateOp& op) {
  UpdateOutcome out;
  try {
    validate_flow(schema_, op.flow);
  } catch (const Error& e) {
    out.refusal = e.code();
    out.message = e.what();
    return out;
  }
  const auto hit = find_rule(op.flow);
  switch (op.kind) {
    case UpdateKind::modify:
    case UpdateKind::remove:
      if (!hit) {
        out.refusal = ErrorCode::not_found;
        out.message = "no stored flow matches the request";
        return out;
      }
      if (op.kind == UpdateKind::modify)
        entries_[*hit].flow.action = op.flow.action;
      else
        entries_[*hit].valid = false;
      break;
    case UpdateKind::insert: {
      if (hit) {
        out.refusal = ErrorCode::duplicate;
        out.other = entries_[*hit].flow.id;
        out.message = "flow already present";
        return out;
      }
      for (const OracleEntry& e : entries_)
        if (e.valid && e.flow.id == op.flow.id) {
          out.refusal = ErrorCode::duplicate;
          out.other = op.flow.id;
          out.message = "flow id in use";
          return out;
        }
      if (auto c = oracle_overlap(*this, op.flow)) {
        out.refusal = ErrorCode::conflict;
        out.other = c;
        out.message = "overlaps stored flow";
        return out;
      }
      entries_.push_back({op.flow, true});
      break;
    }
  }
  out.accepted = true;
  return out;
}

std::optional<OracleMatch> oracle_classify(const OracleTable& t, const Packet& pkt) {
  const Flow* best = nullptr;
  for (const OracleEntry& e : t.entries()) {
    if (!e.valid || !flow_matches(t.schema(), e.flow, pkt)) continue;
    if (!best || e.flow.priority > best->priority ||
        (e.flow.priority == best->priority && e.flow.id < best->id))
      best = &e.flow;
  }
  if (!best) return std::nullopt;
  return OracleMatch{best->id, best->priority, best->action};
}

std::optional<Payload> oracle_search(std::span<const KeyEntry> entries, const Wide& key) {
  for (const KeyEntry& e : entries)
    if (e.valid && e.range.lo <= key && key <= e.range.hi) return e.payload;
  return std::nullopt;
}

std::optional<FlowId> oracle_overlap(const OracleTable& t, const Flow& f) {
  std::optional<FlowId> lowest;
  for (const OracleEntry& e : t.entries())
    if (e.valid && overlap_check(f, e.flow) && (!lowest || e.flow.id < *lowest)) lowest = e.flow.id;
  return lowest;
}

}  // namespace rtst
