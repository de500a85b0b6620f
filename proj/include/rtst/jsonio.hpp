#pragma once

#include "rtst/engine.hpp"
#include "rtst/flow.hpp"
#include "rtst/partition.hpp"
#include "rtst/pipeline.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rtst {

using Json = nlohmann::ordered_json;

// Line-JSON formats; see docs/formats.md. Readers throw Error(parse) with the
// offending line number, writers emit one compact object per line.

Json schema_to_json(const FieldSchema& s);
FieldSchema schema_from_json(const Json& j);
// "openflow", "five_tuple", or a path to a schema JSON file.
FieldSchema load_schema(std::string_view spec);

Json flow_to_json(const FieldSchema& s, const Flow& f);
Flow flow_from_json(const FieldSchema& s, const Json& j);
Json packet_to_json(const FieldSchema& s, const Packet& p);
Packet packet_from_json(const FieldSchema& s, const Json& j);
Json update_to_json(const FieldSchema& s, const UpdateOp& op);
UpdateOp update_from_json(const FieldSchema& s, const Json& j);

Json plan_to_json(const GroupPlan& plan);
GroupPlan plan_from_json(const Json& j);

Json classify_to_json(const ClassifyResult& r, std::size_t packet_index);
Json outcome_to_json(const PacketOutcome& o);
Json stats_to_json(const SimStats& s);
Json update_outcome_to_json(std::size_t index, const UpdateOp& op, const UpdateOutcome& o);
Json error_to_json(const Error& e);

Json node_to_json(const NodeSlot& n);
Json tree_to_json(const Rtst& t);
Json engine_to_json(const LookupEngine& e);

FlowTable read_flows(const FieldSchema& s, std::istream& in);
std::vector<Packet> read_packets(const FieldSchema& s, std::istream& in);
std::vector<UpdateOp> read_updates(const FieldSchema& s, std::istream& in);
void write_flows(std::ostream& out, const FlowTable& t);
void write_packets(std::ostream& out, const FieldSchema& s, const std::vector<Packet>& pkts);
void write_updates(std::ostream& out, const FieldSchema& s, const std::vector<UpdateOp>& ops);

// File wrappers; Error(io) when the file cannot be opened.
FlowTable load_flows(const FieldSchema& s, const std::string& path);
std::vector<Packet> load_packets(const FieldSchema& s, const std::string& path);
std::vector<UpdateOp> load_updates(const FieldSchema& s, const std::string& path);
Json load_json(const std::string& path);
void save_text(const std::string& path, const std::string& text);

}  // namespace rtst
