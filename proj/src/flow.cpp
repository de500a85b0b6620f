#include "rtst/flow.hpp"

#include "rtst/error.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace rtst {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::duplicate: return "duplicate";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::capacity: return "capacity";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

std::string to_hex(const Wide& v) {
  std::ostringstream os;
  os << std::hex << std::showbase << v;
  std::string s = os.str();
  return s == "0" ? "0x0" : s;
}

Wide from_hex(std::string_view text) {
  if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
  if (text.empty()) throw Error(ErrorCode::parse, "empty hex literal");
  Wide v = 0;
  for (char c : text) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else throw Error(ErrorCode::parse, "bad hex digit in '" + std::string(text) + "'");
    v = (v << 4) | d;
  }
  return v;
}

FieldSchema::FieldSchema(std::vector<Field> fields) : fields_(std::move(fields)) {
  std::vector<std::size_t> prefixes;
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const Field& f = fields_[i];
    if (f.width_bits == 0 || f.width_bits > kMaxFieldWidth)
      throw Error(ErrorCode::invalid_argument,
                  "field '" + f.name + "' width must be in [1, 64]");
    if (!names.insert(f.name).second)
      throw Error(ErrorCode::invalid_argument, "duplicate field name '" + f.name + "'");
    header_bits_ += f.width_bits;
    if (f.kind == FieldKind::prefix) prefixes.push_back(i);
    else exact_indices_.push_back(i);
  }
  if (prefixes.size() != 2)
    throw Error(ErrorCode::invalid_argument, "schema needs exactly two prefix fields (SA, DA)");
  sa_index_ = prefixes[0];
  da_index_ = prefixes[1];
}

FieldSchema FieldSchema::openflow() {
  using K = FieldKind;
  return FieldSchema({
      {"ingress_port", 32, K::exact}, {"metadata", 64, K::exact},
      {"eth_src", 48, K::exact},      {"eth_dst", 48, K::exact},
      {"eth_type", 16, K::exact},     {"vlan_id", 12, K::exact},
      {"vlan_pcp", 3, K::exact},      {"mpls_label", 20, K::exact},
      {"mpls_tc", 3, K::exact},       {"ip_src", 32, K::prefix},
      {"ip_dst", 32, K::prefix},      {"ip_proto", 8, K::exact},
      {"ip_tos", 6, K::exact},        {"l4_src", 16, K::exact},
      {"l4_dst", 16, K::exact},
  });
}

FieldSchema FieldSchema::five_tuple() {
  using K = FieldKind;
  return FieldSchema({
      {"ip_src", 32, K::prefix}, {"ip_dst", 32, K::prefix},
      {"l4_src", 16, K::exact},  {"l4_dst", 16, K::exact},
      {"ip_proto", 8, K::exact},
  });
}

std::size_t FieldSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i)
    if (fields_[i].name == name) return i;
  throw Error(ErrorCode::invalid_argument, "unknown field '" + std::string(name) + "'");
}

Range::Range(Wide lo_, Wide hi_, unsigned width_)
    : lo(std::move(lo_)), hi(std::move(hi_)), width(width_) {
  if (lo > hi) throw Error(ErrorCode::invalid_argument, "range lo > hi");
  if (hi > low_mask(width)) throw Error(ErrorCode::invalid_argument, "range exceeds its width");
}

namespace {

std::uint64_t mask64(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace

Prefix::Prefix(std::uint64_t value_, unsigned length_, unsigned width_)
    : value(value_), length(length_), width(width_) {
  if (width == 0 || width > 64) throw Error(ErrorCode::invalid_argument, "prefix width out of range");
  if (length > width) throw Error(ErrorCode::invalid_argument, "prefix length exceeds width");
  if ((value & ~mask64(width)) != 0)
    throw Error(ErrorCode::invalid_argument, "prefix value exceeds field width");
  if ((value & mask64(width - length)) != 0)
    throw Error(ErrorCode::invalid_argument, "prefix value has bits below its length");
}

Prefix Prefix::of(std::uint64_t bits, unsigned length, unsigned width) {
  const std::uint64_t keep = mask64(width) & ~mask64(width - std::min(length, width));
  return Prefix(bits & keep, length, width);
}

Range range_from_prefix(const Prefix& p) {
  const std::uint64_t free = mask64(p.width - p.length);
  return Range(Wide(p.value), Wide(p.value | free), p.width);
}

void validate_flow(const FieldSchema& schema, const Flow& f) {
  auto bad = [&](const std::string& why) {
    throw Error(ErrorCode::invalid_argument, "flow " + std::to_string(f.id) + ": " + why, f.id);
  };
  if (f.sa.width != schema.sa_width()) bad("source prefix width does not match schema");
  if (f.da.width != schema.da_width()) bad("destination prefix width does not match schema");
  // Re-run Prefix invariants in case the struct was filled field by field.
  (void)Prefix(f.sa.value, f.sa.length, f.sa.width);
  (void)Prefix(f.da.value, f.da.length, f.da.width);
  const auto exact = schema.exact_indices();
  if (f.exact.size() != exact.size()) bad("wrong number of exact fields");
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const Field& field = schema.fields()[exact[i]];
    if ((f.exact[i] & ~mask64(field.width_bits)) != 0) bad("field '" + field.name + "' exceeds its width");
  }
}

void validate_packet(const FieldSchema& schema, const Packet& p) {
  if (p.values.size() != schema.size())
    throw Error(ErrorCode::invalid_argument, "packet field count does not match schema");
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const Field& field = schema.fields()[i];
    if ((p.values[i] & ~mask64(field.width_bits)) != 0)
      throw Error(ErrorCode::invalid_argument, "packet field '" + field.name + "' exceeds its width");
  }
}

namespace {

bool prefix_matches(const Prefix& p, std::uint64_t x) {
  const std::uint64_t free = mask64(p.width - p.length);
  return (x & ~free) == p.value;
}

bool prefixes_intersect(const Prefix& a, const Prefix& b) {
  // Two prefixes intersect iff the shorter one covers the longer one.
  const Prefix& shorter = a.length <= b.length ? a : b;
  const Prefix& longer = a.length <= b.length ? b : a;
  return prefix_matches(shorter, longer.value);
}

}  // namespace

bool flow_matches(const FieldSchema& schema, const Flow& f, const Packet& pkt) {
  validate_packet(schema, pkt);
  if (f.exact.size() != schema.exact_indices().size() || f.sa.width != schema.sa_width() ||
      f.da.width != schema.da_width())
    throw Error(ErrorCode::invalid_argument, "flow does not match schema");
  if (!prefix_matches(f.sa, pkt.values[schema.sa_index()])) return false;
  if (!prefix_matches(f.da, pkt.values[schema.da_index()])) return false;
  const auto exact = schema.exact_indices();
  for (std::size_t i = 0; i < exact.size(); ++i)
    if (pkt.values[exact[i]] != f.exact[i]) return false;
  return true;
}

bool overlap_check(const Flow& a, const Flow& b) {
  return a.priority == b.priority && prefixes_intersect(a.sa, b.sa) &&
         prefixes_intersect(a.da, b.da) && a.exact == b.exact;
}

FlowTable::FlowTable(FieldSchema s, std::vector<Flow> f) : schema(std::move(s)), flows(std::move(f)) {}

void FlowTable::validate() const {
  std::unordered_set<FlowId> ids;
  for (const Flow& f : flows) {
    validate_flow(schema, f);
    if (!ids.insert(f.id).second)
      throw Error(ErrorCode::duplicate, "duplicate flow id " + std::to_string(f.id), f.id);
  }
}

const Flow* FlowTable::find(FlowId id) const {
  auto it = std::find_if(flows.begin(), flows.end(), [&](const Flow& f) { return f.id == id; });
  return it == flows.end() ? nullptr : &*it;
}

}  // namespace rtst
