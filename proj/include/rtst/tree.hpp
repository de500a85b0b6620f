#pragma once

#include "rtst/flow.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace rtst {

// Node address in the implicit layout. Roots live at level 0 with addresses
// 1..R; the children of address a are 3a, 3a+1 and 3a+2 one level down.
using Address = std::uint64_t;
using Payload = std::uint64_t;

enum class Branch : std::uint8_t { left, middle, right, match_left, match_right };

const char* branch_name(Branch b) noexcept;

struct KeyEntry {
  Range range;
  Payload payload = 0;
  bool valid = true;

  bool operator==(const KeyEntry&) const = default;
};

// One memory word: up to two keys. A node with a single key keeps it in
// `left` and never has a middle child.
struct NodeSlot {
  std::optional<KeyEntry> left;
  std::optional<KeyEntry> right;

  std::size_t key_count() const { return (left ? 1 : 0) + (right ? 1 : 0); }
  bool full() const { return left && right; }

  bool operator==(const NodeSlot&) const = default;
};

struct TraceStep {
  unsigned level = 0;
  Address address = 0;
  Branch branch = Branch::left;

  bool operator==(const TraceStep&) const = default;
};

struct SearchResult {
  std::optional<Payload> payload;
  std::vector<TraceStep> trace;
};

// New content for one node. Updates are expressed as lists of these so that
// the pipeline model can replay them as write bubbles.
struct NodeWrite {
  unsigned level = 0;
  Address address = 0;
  NodeSlot content;

  bool operator==(const NodeWrite&) const = default;
};

struct MemoryFootprint {
  std::uint64_t data_bits = 0;
  std::uint64_t overhead_bits = 0;

  double data_bytes() const { return static_cast<double>(data_bits) / 8.0; }
  double overhead_bytes() const { return static_cast<double>(overhead_bits) / 8.0; }

  MemoryFootprint& operator+=(const MemoryFootprint& o) {
    data_bits += o.data_bits;
    overhead_bits += o.overhead_bits;
    return *this;
  }
};

struct KeyLocation {
  unsigned level = 0;
  Address address = 0;
  bool right = false;
  KeyEntry entry;
};

enum class InsertVerdict {
  ok,
  overlaps_live,     // a valid stored key intersects the new key
  overlaps_retired,  // several invalid keys intersect it; no single slot to reuse
  height_limit,
};

struct InsertCheck {
  InsertVerdict verdict = InsertVerdict::ok;
  // Payload of the intersecting valid key for overlaps_live.
  std::optional<Payload> conflict;

  explicit operator bool() const { return verdict == InsertVerdict::ok; }
};

// Positions of the two root keys for a sorted run of n elements. n = 1 puts
// the only element in the left field.
std::pair<std::size_t, std::size_t> split_locations(std::size_t n);

constexpr Address child_address(Address a, Branch b) {
  switch (b) {
    case Branch::left: return 3 * a;
    case Branch::middle: return 3 * a + 1;
    default: return 3 * a + 2;
  }
}

// 3^level: first address on `level`. Level-local index is address - base.
constexpr Address level_base(unsigned level) {
  Address b = 1;
  for (unsigned i = 0; i < level; ++i) b *= 3;
  return b;
}

// Comparator and next-address decision for one node visit. A key falling in
// an invalid range routes to the middle child.
Branch route(const NodeSlot& node, const Wide& key);

// Range-based ternary search tree over disjoint ranges, stored level by level
// without child references. A single Rtst may hold several trees (a forest)
// whose roots share level 0.
class Rtst {
 public:
  static constexpr unsigned kMaxLevels = 24;

  explicit Rtst(unsigned key_width = 1, Address roots = 1);

  // Recursive third-split build over a strictly increasing, disjoint run. Single root.
  static Rtst build_complete(unsigned key_width, std::span<const KeyEntry> sorted);

  // Appends a new root and builds a complete tree under it. An empty run
  // reserves an empty root. Returns the root address.
  Address add_tree(std::span<const KeyEntry> sorted);

  unsigned key_width() const { return key_width_; }
  Address root_count() const { return roots_; }
  unsigned height() const { return static_cast<unsigned>(levels_.size()); }
  unsigned height(Address root) const;
  std::size_t node_count() const;
  std::size_t key_count() const;
  std::size_t valid_count() const;

  SearchResult search(const Wide& key, Address root = 1) const;
  // Exact stored key, valid or not.
  std::optional<KeyLocation> locate(const Range& key, Address root = 1) const;

  InsertCheck check_insert(const Range& key, Address root = 1) const;
  std::vector<NodeWrite> insert(const Range& key, Payload payload, Address root = 1);
  // Clears the key's valid bit.
  std::vector<NodeWrite> erase(const Range& key, Address root = 1);
  std::vector<NodeWrite> modify(const Range& key, Payload payload, Address root = 1);

  const NodeSlot* node(unsigned level, Address address) const;
  void write_node(unsigned level, Address address, NodeSlot content);
  void apply(std::span<const NodeWrite> writes);
  // Grows the forest's root range to at least n (no-op when already larger).
  void ensure_roots(Address n) { roots_ = std::max(roots_, n); }

  std::vector<KeyEntry> in_order(Address root = 1) const;
  MemoryFootprint memory() const;
  // Slots in the dense level array, holes included.
  std::uint64_t level_length(unsigned level) const;

  // Per level: u32 slot count, then per slot left lo/hi, right lo/hi (each
  // ceil(width/8) bytes, big-endian; an absent key is lo=all ones, hi=0),
  // left and right payload (u64), then a 2-bit-per-slot valid bitmap.
  std::vector<std::uint8_t> serialize() const;
  static Rtst deserialize(unsigned key_width, std::span<const std::uint8_t> bytes);

  // Sparse view of each level keyed by level-local index.
  const std::vector<std::map<std::uint64_t, NodeSlot>>& levels() const { return levels_; }

  bool operator==(const Rtst&) const = default;

 private:
  struct InsertPlan {
    InsertCheck check;
    std::vector<NodeWrite> writes;
  };

  void check_root(Address root) const;
  void check_key(const Range& key) const;
  void place(unsigned level, Address address, std::span<const KeyEntry> items);
  InsertPlan plan_insert(const Range& key, Payload payload, Address root) const;
  void collect_overlaps(unsigned level, Address address, const Range& key,
                        std::vector<KeyLocation>& out) const;
  bool is_leaf(unsigned level, Address address) const;
  void in_order_into(unsigned level, Address address, std::vector<KeyEntry>& out) const;
  unsigned depth_below(unsigned level, Address address) const;

  unsigned key_width_;
  Address roots_;
  std::vector<std::map<std::uint64_t, NodeSlot>> levels_;
};

}  // namespace rtst
