#pragma once

#include "rtst/wide.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rtst {

using FlowId = std::uint64_t;

enum class FieldKind { prefix, exact };

struct Field {
  std::string name;
  unsigned width_bits = 0;
  FieldKind kind = FieldKind::exact;

  bool operator==(const Field&) const = default;
};

// Ordered header layout. Exactly two prefix fields: the first is the source
// address, the second the destination address. Field widths are capped at 64
// bits; keys built from several fields use Wide.
class FieldSchema {
 public:
  static constexpr unsigned kMaxFieldWidth = 64;

  explicit FieldSchema(std::vector<Field> fields);

  // 15 fields, 356 bits.
  static FieldSchema openflow();
  // Classic 5-tuple, 104 bits.
  static FieldSchema five_tuple();

  std::span<const Field> fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  unsigned header_bits() const { return header_bits_; }

  std::size_t sa_index() const { return sa_index_; }
  std::size_t da_index() const { return da_index_; }
  unsigned sa_width() const { return fields_[sa_index_].width_bits; }
  unsigned da_width() const { return fields_[da_index_].width_bits; }
  // Schema indices of the exact fields, in schema order.
  std::span<const std::size_t> exact_indices() const { return exact_indices_; }
  // Width of the DST key: all exact fields followed by the DA field.
  unsigned dst_key_bits() const { return header_bits_ - sa_width(); }

  std::size_t index_of(std::string_view name) const;

  bool operator==(const FieldSchema& other) const { return fields_ == other.fields_; }

 private:
  std::vector<Field> fields_;
  unsigned header_bits_ = 0;
  std::size_t sa_index_ = 0;
  std::size_t da_index_ = 0;
  std::vector<std::size_t> exact_indices_;
};

// Closed integer interval [lo, hi] within a `width`-bit space.
struct Range {
  Wide lo;
  Wide hi;
  unsigned width = 0;

  Range() = default;
  Range(Wide lo_, Wide hi_, unsigned width_);

  bool contains(const Wide& x) const { return lo <= x && x <= hi; }
  bool intersects(const Range& o) const { return lo <= o.hi && o.lo <= hi; }
  Wide size() const { return hi - lo + 1; }

  bool operator==(const Range& o) const { return lo == o.lo && hi == o.hi && width == o.width; }
};

// Strict order for disjoint ranges.
inline bool precedes(const Range& a, const Range& b) { return a.hi < b.lo; }

struct Prefix {
  std::uint64_t value = 0;
  unsigned length = 0;
  unsigned width = 0;

  Prefix() = default;
  // Throws if length > width or value carries bits below the prefix.
  Prefix(std::uint64_t value_, unsigned length_, unsigned width_);

  // Keeps the top `length` bits of `bits`.
  static Prefix of(std::uint64_t bits, unsigned length, unsigned width);

  bool operator==(const Prefix&) const = default;
};

Range range_from_prefix(const Prefix& p);

struct Flow {
  FlowId id = 0;
  std::int64_t priority = 0;
  std::string action;
  Prefix sa;
  Prefix da;
  // One value per exact field, in schema order.
  std::vector<std::uint64_t> exact;

  // Same match fields and priority. Ignores id and action.
  bool same_rule(const Flow& o) const {
    return priority == o.priority && sa == o.sa && da == o.da && exact == o.exact;
  }
  bool operator==(const Flow&) const = default;
};

// One value per schema field, in schema order.
struct Packet {
  std::vector<std::uint64_t> values;

  bool operator==(const Packet&) const = default;
};

// Throws Error(invalid_argument) if the flow does not fit the schema.
void validate_flow(const FieldSchema& schema, const Flow& f);
void validate_packet(const FieldSchema& schema, const Packet& p);

bool flow_matches(const FieldSchema& schema, const Flow& f, const Packet& pkt);

// Same priority and some packet could match both.
bool overlap_check(const Flow& a, const Flow& b);

struct FlowTable {
  FieldSchema schema;
  std::vector<Flow> flows;

  explicit FlowTable(FieldSchema s, std::vector<Flow> f = {});

  // Validates every flow and id uniqueness.
  void validate() const;
  const Flow* find(FlowId id) const;
};

}  // namespace rtst
