#include "rtst/jsonio.hpp"

#include "rtst/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace rtst {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::parse, what); }

const Json& member(const Json& j, const char* key) {
  if (!j.is_object()) fail("expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing \"") + key + "\"");
  return *it;
}

std::uint64_t to_u64(const Json& v, const std::string& what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) fail(what + " is negative");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      std::uint64_t out = 0;
      auto [p, ec] = std::from_chars(s.data() + 2, s.data() + s.size(), out, 16);
      if (ec == std::errc() && p == s.data() + s.size()) return out;
    }
  }
  fail(what + " must be an unsigned integer or a 0x hex string");
}

template <class T, class F>
std::vector<T> read_lines(std::istream& in, F&& parse) {
  std::vector<T> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::parse, "line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(n) + ": " + e.what(), e.flow_id());
    }
  }
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  return in;
}

Json key_to_json(const KeyEntry& k) {
  return Json{{"lo", to_hex(k.range.lo)}, {"hi", to_hex(k.range.hi)}, {"payload", k.payload}, {"valid", k.valid}};
}

Json trace_to_json(const std::vector<TraceStep>& steps) {
  Json a = Json::array();
  for (const TraceStep& s : steps)
    a.push_back({{"level", s.level}, {"address", s.address}, {"branch", branch_name(s.branch)}});
  return a;
}

}  // namespace

Json schema_to_json(const FieldSchema& s) {
  Json fields = Json::array();
  for (const Field& f : s.fields())
    fields.push_back({{"name", f.name}, {"width", f.width_bits}, {"kind", f.kind == FieldKind::prefix ? "prefix" : "exact"}});
  return Json{{"fields", fields}};
}

FieldSchema schema_from_json(const Json& j) {
  std::vector<Field> fields;
  const Json& arr = member(j, "fields");
  if (!arr.is_array()) fail("\"fields\" must be an array");
  for (const Json& f : arr) {
    const std::string kind = member(f, "kind").get<std::string>();
    if (kind != "prefix" && kind != "exact") fail("field kind must be prefix or exact");
    fields.push_back({member(f, "name").get<std::string>(), static_cast<unsigned>(to_u64(member(f, "width"), "width")),
                      kind == "prefix" ? FieldKind::prefix : FieldKind::exact});
  }
  return FieldSchema(std::move(fields));
}

FieldSchema load_schema(std::string_view spec) {
  if (spec == "openflow") return FieldSchema::openflow();
  if (spec == "five_tuple") return FieldSchema::five_tuple();
  try {
    return schema_from_json(load_json(std::string(spec)));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, std::string(spec) + ": " + e.what());
  }
}

Json flow_to_json(const FieldSchema& s, const Flow& f) {
  Json fields = Json::object();
  std::size_t e = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Field& fd = s.fields()[i];
    if (i == s.sa_index() || i == s.da_index()) {
      const Prefix& p = i == s.sa_index() ? f.sa : f.da;
      fields[fd.name] = {{"value", p.value}, {"length", p.length}};
    } else {
      fields[fd.name] = {{"value", f.exact.at(e++)}};
    }
  }
  return Json{{"id", f.id}, {"priority", f.priority}, {"action", f.action}, {"fields", fields}};
}

Flow flow_from_json(const FieldSchema& s, const Json& j) {
  Flow f;
  f.id = to_u64(member(j, "id"), "id");
  const Json& pr = member(j, "priority");
  if (!pr.is_number_integer()) fail("priority must be an integer");
  f.priority = pr.get<std::int64_t>();
  const Json& act = member(j, "action");
  if (!act.is_string()) fail("action must be a string");
  f.action = act.get<std::string>();
  const Json& fields = member(j, "fields");
  if (!fields.is_object()) fail("\"fields\" must be an object");
  if (fields.size() != s.size()) fail("flow " + std::to_string(f.id) + " must name every schema field exactly once");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Field& fd = s.fields()[i];
    auto it = fields.find(fd.name);
    if (it == fields.end()) fail("flow " + std::to_string(f.id) + " lacks field " + fd.name);
    const std::uint64_t v = to_u64(member(*it, "value"), fd.name);
    if (fd.kind == FieldKind::prefix) {
      const unsigned len = static_cast<unsigned>(to_u64(member(*it, "length"), fd.name + ".length"));
      (i == s.sa_index() ? f.sa : f.da) = Prefix(v, len, fd.width_bits);
    } else {
      if (it->contains("length")) fail("exact field " + fd.name + " takes no length");
      f.exact.push_back(v);
    }
  }
  validate_flow(s, f);
  return f;
}

Json packet_to_json(const FieldSchema& s, const Packet& p) {
  Json j = Json::object();
  for (std::size_t i = 0; i < s.size(); ++i) j[s.fields()[i].name] = p.values.at(i);
  return j;
}

Packet packet_from_json(const FieldSchema& s, const Json& j) {
  if (!j.is_object()) fail("packet must be an object");
  if (j.size() != s.size()) fail("packet must carry one value per schema field");
  Packet p;
  for (const Field& fd : s.fields()) p.values.push_back(to_u64(member(j, fd.name.c_str()), fd.name));
  validate_packet(s, p);
  return p;
}

Json update_to_json(const FieldSchema& s, const UpdateOp& op) {
  Json j{{"op", update_kind_name(op.kind)}, {"flow", flow_to_json(s, op.flow)}};
  if (op.at) j["at"] = *op.at;
  return j;
}

UpdateOp update_from_json(const FieldSchema& s, const Json& j) {
  UpdateOp op;
  const std::string kind = member(j, "op").get<std::string>();
  if (kind == "modify")
    op.kind = UpdateKind::modify;
  else if (kind == "delete")
    op.kind = UpdateKind::remove;
  else if (kind == "insert")
    op.kind = UpdateKind::insert;
  else
    fail("unknown op \"" + kind + "\"");
  op.flow = flow_from_json(s, member(j, "flow"));
  if (j.contains("at")) op.at = to_u64(j["at"], "at");
  return op;
}

Json plan_to_json(const GroupPlan& plan) {
  return Json{{"k", plan.k()}, {"groups", plan.groups}};
}

GroupPlan plan_from_json(const Json& j) {
  GroupPlan plan;
  const Json& groups = member(j, "groups");
  if (!groups.is_array()) fail("\"groups\" must be an array");
  for (const Json& g : groups) {
    if (!g.is_array()) fail("each group must be an array of flow ids");
    auto& ids = plan.groups.emplace_back();
    for (const Json& id : g) ids.push_back(to_u64(id, "flow id"));
  }
  if (j.contains("k") && to_u64(j["k"], "k") != plan.k()) fail("\"k\" disagrees with the group count");
  return plan;
}

Json classify_to_json(const ClassifyResult& r, std::size_t packet_index) {
  Json j{{"packet", packet_index}};
  if (r.flow_id) {
    j["flow_id"] = *r.flow_id;
    j["priority"] = r.priority;
    j["action"] = r.action;
  } else {
    j["flow_id"] = nullptr;
  }
  if (!r.traces.empty()) {
    Json t = Json::array();
    for (const GroupTrace& g : r.traces) {
      Json e{{"group", g.group}, {"sst", trace_to_json(g.sst)}};
      if (g.dst_root) e["dst_root"] = *g.dst_root;
      e["dst"] = trace_to_json(g.dst);
      t.push_back(std::move(e));
    }
    j["traces"] = std::move(t);
  }
  return j;
}

Json outcome_to_json(const PacketOutcome& o) {
  Json j{{"packet", o.seq}};
  if (o.flow_id) {
    j["flow_id"] = *o.flow_id;
    j["action"] = o.action;
  } else {
    j["flow_id"] = nullptr;
  }
  j["inject_cycle"] = o.inject_cycle;
  j["exit_cycle"] = o.exit_cycle;
  j["latency"] = o.latency();
  j["sst_reads"] = o.sst_reads;
  j["dst_reads"] = o.dst_reads;
  return j;
}

Json stats_to_json(const SimStats& s) {
  return Json{{"cycles", s.cycles},
              {"packets_in", s.packets_in},
              {"packets_out", s.packets_out},
              {"bubbles", s.bubbles},
              {"memory_reads", s.memory_reads},
              {"memory_writes", s.memory_writes},
              {"latency_min", s.latency_min},
              {"latency_max", s.latency_max},
              {"latency_mean", s.latency_mean},
              {"throughput", s.throughput},
              {"clock_mhz", s.clock_mhz},
              {"projected_mpps", s.projected_mpps},
              {"peak_stage_reads", s.peak_stage_reads},
              {"peak_stage_writes", s.peak_stage_writes},
              {"sst_stages", s.sst_stages},
              {"dst_stages", s.dst_stages},
              {"groups", s.groups}};
}

Json update_outcome_to_json(std::size_t index, const UpdateOp& op, const UpdateOutcome& o) {
  Json j{{"index", index}, {"op", update_kind_name(op.kind)}, {"flow_id", op.flow.id}, {"accepted", o.accepted}};
  if (o.refusal) j["refusal"] = error_code_name(*o.refusal);
  if (o.other) j["other"] = *o.other;
  if (!o.accepted) j["message"] = o.message;
  return j;
}

Json error_to_json(const Error& e) {
  Json j{{"error", error_code_name(e.code())}, {"message", e.what()}};
  if (e.flow_id()) j["flow_id"] = *e.flow_id();
  return j;
}

Json node_to_json(const NodeSlot& n) {
  Json j = Json::object();
  if (n.left) j["left"] = key_to_json(*n.left);
  if (n.right) j["right"] = key_to_json(*n.right);
  return j;
}

Json tree_to_json(const Rtst& t) {
  Json levels = Json::array();
  for (unsigned i = 0; i < t.height(); ++i) {
    Json nodes = Json::array();
    const Address base = level_base(i);
    for (const auto& [idx, slot] : t.levels()[i]) {
      Json n = node_to_json(slot);
      n["index"] = idx;
      n["address"] = base + idx;
      nodes.push_back(std::move(n));
    }
    levels.push_back({{"level", i}, {"length", t.level_length(i)}, {"nodes", std::move(nodes)}});
  }
  const MemoryFootprint m = t.memory();
  return Json{{"key_width", t.key_width()},
              {"roots", t.root_count()},
              {"height", t.height()},
              {"keys", t.key_count()},
              {"valid_keys", t.valid_count()},
              {"data_bits", m.data_bits},
              {"overhead_bits", m.overhead_bits},
              {"serialized_bytes", t.serialize().size()},
              {"levels", std::move(levels)}};
}

Json engine_to_json(const LookupEngine& e) {
  Json groups = Json::array();
  for (std::size_t g = 0; g < e.group_count(); ++g)
    groups.push_back({{"group", g}, {"sst", tree_to_json(e.group(g).sst)}, {"dst", tree_to_json(e.group(g).dst)}});
  const MemoryFootprint m = e.memory();
  return Json{{"schema", schema_to_json(e.schema())},
              {"flows", e.flow_count()},
              {"k", e.group_count()},
              {"sst_height", e.sst_height()},
              {"dst_height", e.dst_height()},
              {"data_bits", m.data_bits},
              {"overhead_bits", m.overhead_bits},
              {"groups", std::move(groups)}};
}

FlowTable read_flows(const FieldSchema& s, std::istream& in) {
  FlowTable t(s, read_lines<Flow>(in, [&](const Json& j) { return flow_from_json(s, j); }));
  t.validate();
  return t;
}

std::vector<Packet> read_packets(const FieldSchema& s, std::istream& in) {
  return read_lines<Packet>(in, [&](const Json& j) { return packet_from_json(s, j); });
}

std::vector<UpdateOp> read_updates(const FieldSchema& s, std::istream& in) {
  return read_lines<UpdateOp>(in, [&](const Json& j) { return update_from_json(s, j); });
}

void write_flows(std::ostream& out, const FlowTable& t) {
  for (const Flow& f : t.flows) out << flow_to_json(t.schema, f).dump() << '\n';
}

void write_packets(std::ostream& out, const FieldSchema& s, const std::vector<Packet>& pkts) {
  for (const Packet& p : pkts) out << packet_to_json(s, p).dump() << '\n';
}

void write_updates(std::ostream& out, const FieldSchema& s, const std::vector<UpdateOp>& ops) {
  for (const UpdateOp& op : ops) out << update_to_json(s, op).dump() << '\n';
}

FlowTable load_flows(const FieldSchema& s, const std::string& path) {
  auto in = open_in(path);
  return read_flows(s, in);
}

std::vector<Packet> load_packets(const FieldSchema& s, const std::string& path) {
  auto in = open_in(path);
  return read_packets(s, in);
}

std::vector<UpdateOp> load_updates(const FieldSchema& s, const std::string& path) {
  auto in = open_in(path);
  return read_updates(s, in);
}

Json load_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what());
  }
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

}  // namespace rtst
