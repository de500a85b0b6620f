#include "rtst/tree.hpp"

#include "rtst/error.hpp"

#include <algorithm>
#include <array>

namespace rtst {

const char* branch_name(Branch b) noexcept {
  switch (b) {
    case Branch::left: return "left";
    case Branch::middle: return "middle";
    case Branch::right: return "right";
    case Branch::match_left: return "match-left";
    case Branch::match_right: return "match-right";
  }
  return "?";
}

std::pair<std::size_t, std::size_t> split_locations(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "split_locations of an empty list");
  if (n == 1) return {0, 0};
  return {n / 3, 2 * n / 3};
}

Branch route(const NodeSlot& node, const Wide& key) {
  const KeyEntry& l = *node.left;
  if (key < l.range.lo) return Branch::left;
  if (key <= l.range.hi) return l.valid ? Branch::match_left : Branch::middle;
  if (!node.right) return Branch::right;
  const KeyEntry& r = *node.right;
  if (key < r.range.lo) return Branch::middle;
  if (key <= r.range.hi) return r.valid ? Branch::match_right : Branch::middle;
  return Branch::right;
}

namespace {

// Direction for a key that intersects none of the node's keys.
Branch direction(const NodeSlot& node, const Range& key) {
  if (key.hi < node.left->range.lo) return Branch::left;
  if (!node.right) return Branch::right;
  if (key.lo > node.right->range.hi) return Branch::right;
  return Branch::middle;
}

NodeSlot with_key(NodeSlot slot, bool right, KeyEntry e) {
  (right ? slot.right : slot.left) = std::move(e);
  return slot;
}

}  // namespace

Rtst::Rtst(unsigned key_width, Address roots) : key_width_(key_width), roots_(roots) {
  if (key_width_ == 0) throw Error(ErrorCode::invalid_argument, "key width must be positive");
}

Rtst Rtst::build_complete(unsigned key_width, std::span<const KeyEntry> sorted) {
  Rtst t(key_width, 0);
  t.add_tree(sorted);
  return t;
}

Address Rtst::add_tree(std::span<const KeyEntry> sorted) {
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    check_key(sorted[i].range);
    if (i > 0 && !precedes(sorted[i - 1].range, sorted[i].range))
      throw Error(ErrorCode::invalid_argument, "build input must be strictly increasing and disjoint");
  }
  const Address root = ++roots_;
  place(0, root, sorted);
  return root;
}

void Rtst::place(unsigned level, Address address, std::span<const KeyEntry> items) {
  if (items.empty()) return;
  if (level >= kMaxLevels) throw Error(ErrorCode::capacity, "tree exceeds the level limit");
  NodeSlot slot;
  if (items.size() == 1) {
    slot.left = items[0];
    write_node(level, address, std::move(slot));
    return;
  }
  const auto [ll, lr] = split_locations(items.size());
  slot.left = items[ll];
  slot.right = items[lr];
  write_node(level, address, std::move(slot));
  place(level + 1, child_address(address, Branch::left), items.subspan(0, ll));
  place(level + 1, child_address(address, Branch::middle), items.subspan(ll + 1, lr - ll - 1));
  place(level + 1, child_address(address, Branch::right), items.subspan(lr + 1));
}

void Rtst::check_root(Address root) const {
  if (root == 0 || root > roots_)
    throw Error(ErrorCode::invalid_argument, "root address " + std::to_string(root) + " out of range");
}

void Rtst::check_key(const Range& key) const {
  if (key.width != key_width_)
    throw Error(ErrorCode::invalid_argument, "key width " + std::to_string(key.width) +
                                                 " does not match tree width " + std::to_string(key_width_));
}

const NodeSlot* Rtst::node(unsigned level, Address address) const {
  if (level >= levels_.size()) return nullptr;
  const Address base = level_base(level);
  if (address < base) return nullptr;
  const auto& lv = levels_[level];
  auto it = lv.find(address - base);
  return it == lv.end() ? nullptr : &it->second;
}

void Rtst::write_node(unsigned level, Address address, NodeSlot content) {
  if (level >= kMaxLevels) throw Error(ErrorCode::capacity, "tree exceeds the level limit");
  const Address base = level_base(level);
  if (address < base || address >= base * (roots_ + 1))
    throw Error(ErrorCode::invalid_argument, "address " + std::to_string(address) +
                                                 " is not on level " + std::to_string(level));
  if (!content.left) throw Error(ErrorCode::invalid_argument, "node content without a left key");
  if (content.right && !precedes(content.left->range, content.right->range))
    throw Error(ErrorCode::invalid_argument, "node keys out of order");
  if (levels_.size() <= level) levels_.resize(level + 1);
  levels_[level][address - base] = std::move(content);
}

void Rtst::apply(std::span<const NodeWrite> writes) {
  for (const NodeWrite& w : writes) write_node(w.level, w.address, w.content);
}

bool Rtst::is_leaf(unsigned level, Address address) const {
  for (Branch b : {Branch::left, Branch::middle, Branch::right})
    if (node(level + 1, child_address(address, b))) return false;
  return true;
}

unsigned Rtst::depth_below(unsigned level, Address address) const {
  if (!node(level, address)) return 0;
  unsigned deepest = 0;
  for (Branch b : {Branch::left, Branch::middle, Branch::right})
    deepest = std::max(deepest, depth_below(level + 1, child_address(address, b)));
  return deepest + 1;
}

unsigned Rtst::height(Address root) const {
  check_root(root);
  return depth_below(0, root);
}

std::size_t Rtst::node_count() const {
  std::size_t n = 0;
  for (const auto& lv : levels_) n += lv.size();
  return n;
}

std::size_t Rtst::key_count() const {
  std::size_t n = 0;
  for (const auto& lv : levels_)
    for (const auto& [idx, slot] : lv) n += slot.key_count();
  return n;
}

std::size_t Rtst::valid_count() const {
  std::size_t n = 0;
  for (const auto& lv : levels_)
    for (const auto& [idx, slot] : lv) {
      if (slot.left && slot.left->valid) ++n;
      if (slot.right && slot.right->valid) ++n;
    }
  return n;
}

SearchResult Rtst::search(const Wide& key, Address root) const {
  check_root(root);
  SearchResult out;
  Address addr = root;
  for (unsigned level = 0; level < levels_.size(); ++level) {
    const NodeSlot* n = node(level, addr);
    if (!n) break;
    const Branch b = route(*n, key);
    out.trace.push_back({level, addr, b});
    if (b == Branch::match_left) {
      out.payload = n->left->payload;
      break;
    }
    if (b == Branch::match_right) {
      out.payload = n->right->payload;
      break;
    }
    addr = child_address(addr, b);
  }
  return out;
}

std::optional<KeyLocation> Rtst::locate(const Range& key, Address root) const {
  check_root(root);
  Address addr = root;
  for (unsigned level = 0; level < levels_.size(); ++level) {
    const NodeSlot* n = node(level, addr);
    if (!n) return std::nullopt;
    const KeyEntry& l = *n->left;
    if (l.range.contains(key.lo)) {
      if (l.range == key) return KeyLocation{level, addr, false, l};
      return std::nullopt;
    }
    if (n->right && n->right->range.contains(key.lo)) {
      if (n->right->range == key) return KeyLocation{level, addr, true, *n->right};
      return std::nullopt;
    }
    Branch b;
    if (key.lo < l.range.lo) b = Branch::left;
    else if (!n->right || key.lo > n->right->range.hi) b = Branch::right;
    else b = Branch::middle;
    addr = child_address(addr, b);
  }
  return std::nullopt;
}

void Rtst::collect_overlaps(unsigned level, Address address, const Range& key,
                            std::vector<KeyLocation>& out) const {
  const NodeSlot* n = node(level, address);
  if (!n) return;
  const KeyEntry& l = *n->left;
  if (l.range.intersects(key)) out.push_back({level, address, false, l});
  if (n->right && n->right->range.intersects(key)) out.push_back({level, address, true, *n->right});
  if (key.lo < l.range.lo) collect_overlaps(level + 1, child_address(address, Branch::left), key, out);
  if (n->right) {
    const KeyEntry& r = *n->right;
    if (key.hi > l.range.hi && key.lo < r.range.lo)
      collect_overlaps(level + 1, child_address(address, Branch::middle), key, out);
    if (key.hi > r.range.hi) collect_overlaps(level + 1, child_address(address, Branch::right), key, out);
  } else if (key.hi > l.range.hi) {
    collect_overlaps(level + 1, child_address(address, Branch::right), key, out);
  }
}

Rtst::InsertPlan Rtst::plan_insert(const Range& key, Payload payload, Address root) const {
  check_root(root);
  check_key(key);
  InsertPlan plan;
  const KeyEntry entry{key, payload, true};

  auto replace = [&](const KeyLocation& loc) {
    plan.writes.push_back({loc.level, loc.address, with_key(*node(loc.level, loc.address), loc.right, entry)});
    return plan;
  };

  std::vector<KeyLocation> hits;
  collect_overlaps(0, root, key, hits);
  for (const KeyLocation& h : hits) {
    if (h.entry.valid) {
      plan.check = {InsertVerdict::overlaps_live, h.entry.payload};
      return plan;
    }
  }
  if (hits.size() > 1) {
    plan.check.verdict = InsertVerdict::overlaps_retired;
    return plan;
  }
  // The only intersecting key is retired: its slot is reused in place.
  if (hits.size() == 1) return replace(hits.front());

  const NodeSlot* n = node(0, root);
  if (!n) {
    plan.writes.push_back({0, root, NodeSlot{entry, std::nullopt}});
    return plan;
  }

  // Walk to the insertion point, remembering the in-order neighbours.
  std::optional<KeyLocation> pred, succ;
  unsigned level = 0;
  Address addr = root;
  Branch b;
  for (;;) {
    b = direction(*n, key);
    if (b == Branch::left) {
      succ = KeyLocation{level, addr, false, *n->left};
    } else if (b == Branch::middle) {
      pred = KeyLocation{level, addr, false, *n->left};
      succ = KeyLocation{level, addr, true, *n->right};
    } else {
      pred = n->right ? KeyLocation{level, addr, true, *n->right} : KeyLocation{level, addr, false, *n->left};
    }
    const NodeSlot* child = node(level + 1, child_address(addr, b));
    if (!child) break;
    n = child;
    addr = child_address(addr, b);
    ++level;
  }

  // A retired neighbour's slot sits exactly where the key belongs in order.
  if (pred && !pred->entry.valid) return replace(*pred);
  if (succ && !succ->entry.valid) return replace(*succ);

  // Case A: the node has a free data field.
  if (n->key_count() == 1) {
    NodeSlot s = *n;
    if (key.hi < s.left->range.lo) {
      s.right = s.left;
      s.left = entry;
    } else {
      s.right = entry;
    }
    plan.writes.push_back({level, addr, std::move(s)});
    return plan;
  }

  // Case B: full leaf under a one-key parent. The middle value rises into
  // the parent and the two others become the leaf and the new middle child.
  if (level > 0 && is_leaf(level, addr)) {
    const Address parent = addr / 3;
    const Address side = addr % 3;
    const NodeSlot* p = node(level - 1, parent);
    const Address middle = child_address(parent, Branch::middle);
    if (p && p->key_count() == 1 && side != 1 && !node(level, middle)) {
      std::array<KeyEntry, 3> three{*n->left, *n->right, entry};
      std::sort(three.begin(), three.end(),
                [](const KeyEntry& a, const KeyEntry& c) { return a.range.lo < c.range.lo; });
      NodeSlot up;
      NodeSlot low{three[0], std::nullopt};
      NodeSlot high{three[2], std::nullopt};
      if (side == 0) {
        up = NodeSlot{three[1], p->left};
        plan.writes.push_back({level - 1, parent, std::move(up)});
        plan.writes.push_back({level, addr, std::move(low)});
        plan.writes.push_back({level, middle, std::move(high)});
      } else {
        up = NodeSlot{p->left, three[1]};
        plan.writes.push_back({level - 1, parent, std::move(up)});
        plan.writes.push_back({level, middle, std::move(low)});
        plan.writes.push_back({level, addr, std::move(high)});
      }
      return plan;
    }
  }

  // Otherwise grow a new leaf in the empty child slot the key routes to.
  if (level + 1 >= kMaxLevels) {
    plan.check.verdict = InsertVerdict::height_limit;
    return plan;
  }
  plan.writes.push_back({level + 1, child_address(addr, b), NodeSlot{entry, std::nullopt}});
  return plan;
}

InsertCheck Rtst::check_insert(const Range& key, Address root) const {
  return plan_insert(key, 0, root).check;
}

std::vector<NodeWrite> Rtst::insert(const Range& key, Payload payload, Address root) {
  InsertPlan plan = plan_insert(key, payload, root);
  switch (plan.check.verdict) {
    case InsertVerdict::ok: break;
    case InsertVerdict::overlaps_live:
      throw Error(ErrorCode::conflict, "key overlaps a stored range", plan.check.conflict);
    case InsertVerdict::overlaps_retired:
      throw Error(ErrorCode::conflict, "key spans several retired ranges");
    case InsertVerdict::height_limit:
      throw Error(ErrorCode::capacity, "tree exceeds the level limit");
  }
  apply(plan.writes);
  return plan.writes;
}

std::vector<NodeWrite> Rtst::erase(const Range& key, Address root) {
  check_key(key);
  auto loc = locate(key, root);
  if (!loc || !loc->entry.valid) throw Error(ErrorCode::not_found, "key not present");
  KeyEntry e = loc->entry;
  e.valid = false;
  std::vector<NodeWrite> w{{loc->level, loc->address, with_key(*node(loc->level, loc->address), loc->right, e)}};
  apply(w);
  return w;
}

std::vector<NodeWrite> Rtst::modify(const Range& key, Payload payload, Address root) {
  check_key(key);
  auto loc = locate(key, root);
  if (!loc || !loc->entry.valid) throw Error(ErrorCode::not_found, "key not present");
  KeyEntry e = loc->entry;
  e.payload = payload;
  std::vector<NodeWrite> w{{loc->level, loc->address, with_key(*node(loc->level, loc->address), loc->right, e)}};
  apply(w);
  return w;
}

void Rtst::in_order_into(unsigned level, Address address, std::vector<KeyEntry>& out) const {
  const NodeSlot* n = node(level, address);
  if (!n) return;
  in_order_into(level + 1, child_address(address, Branch::left), out);
  out.push_back(*n->left);
  in_order_into(level + 1, child_address(address, Branch::middle), out);
  if (n->right) out.push_back(*n->right);
  in_order_into(level + 1, child_address(address, Branch::right), out);
}

std::vector<KeyEntry> Rtst::in_order(Address root) const {
  check_root(root);
  std::vector<KeyEntry> out;
  in_order_into(0, root, out);
  return out;
}

std::uint64_t Rtst::level_length(unsigned level) const {
  if (level >= levels_.size()) return 0;
  const auto& lv = levels_[level];
  std::uint64_t len = lv.empty() ? 0 : lv.rbegin()->first + 1;
  if (level == 0) len = std::max<std::uint64_t>(len, roots_);
  return len;
}

MemoryFootprint Rtst::memory() const {
  MemoryFootprint m;
  m.data_bits = static_cast<std::uint64_t>(valid_count()) * key_width_;
  for (unsigned i = 0; i < levels_.size(); ++i) m.overhead_bits += 2 * level_length(i) + 32;
  return m;
}

namespace {

constexpr std::uint64_t kMaxSerializedSlots = std::uint64_t{1} << 24;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_wide(std::vector<std::uint8_t>& out, const Wide& v, std::size_t nbytes) {
  for (std::size_t i = nbytes; i-- > 0;) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint64_t uint(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += n;
    return v;
  }
  Wide wide(std::size_t n) {
    need(n);
    Wide v = 0;
    for (std::size_t i = 0; i < n; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += n;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::parse, "truncated tree image");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> Rtst::serialize() const {
  const std::size_t kb = bytes_for_bits(key_width_);
  const Wide all_ones = low_mask(static_cast<unsigned>(8 * kb));
  std::vector<std::uint8_t> out;
  for (unsigned i = 0; i < levels_.size(); ++i) {
    const std::uint64_t len = level_length(i);
    if (len > kMaxSerializedSlots) throw Error(ErrorCode::capacity, "level too sparse to serialize densely");
    put_u32(out, static_cast<std::uint32_t>(len));
    std::vector<std::uint8_t> bitmap(bytes_for_bits(2 * len), 0);
    const auto& lv = levels_[i];
    auto it = lv.begin();
    for (std::uint64_t idx = 0; idx < len; ++idx) {
      const NodeSlot* slot = nullptr;
      if (it != lv.end() && it->first == idx) slot = &(it++)->second;
      std::array<const std::optional<KeyEntry>*, 2> keys{};
      std::optional<KeyEntry> none;
      keys[0] = slot ? &slot->left : &none;
      keys[1] = slot ? &slot->right : &none;
      for (const auto* k : keys) {
        if (*k) {
          put_wide(out, (*k)->range.lo, kb);
          put_wide(out, (*k)->range.hi, kb);
        } else {
          put_wide(out, all_ones, kb);
          put_wide(out, Wide(0), kb);
        }
      }
      for (int side = 0; side < 2; ++side) {
        const auto& k = *keys[side];
        put_u64(out, k ? k->payload : 0);
        if (k && k->valid) bitmap[(2 * idx + side) / 8] |= static_cast<std::uint8_t>(1u << ((2 * idx + side) % 8));
      }
    }
    out.insert(out.end(), bitmap.begin(), bitmap.end());
  }
  return out;
}

Rtst Rtst::deserialize(unsigned key_width, std::span<const std::uint8_t> bytes) {
  const std::size_t kb = bytes_for_bits(key_width);
  Reader in(bytes);
  std::vector<std::vector<std::pair<std::uint64_t, NodeSlot>>> parsed;
  Address roots = 1;
  while (!in.done()) {
    const unsigned level = static_cast<unsigned>(parsed.size());
    const std::uint64_t len = in.uint(4);
    if (level == 0) roots = std::max<Address>(len, 1);
    std::vector<std::pair<std::uint64_t, NodeSlot>> slots;
    for (std::uint64_t idx = 0; idx < len; ++idx) {
      std::array<std::optional<Range>, 2> ranges;
      for (auto& r : ranges) {
        Wide lo = in.wide(kb);
        Wide hi = in.wide(kb);
        if (lo <= hi) r = Range(std::move(lo), std::move(hi), key_width);
      }
      std::array<std::uint64_t, 2> payloads{in.uint(8), in.uint(8)};
      if (!ranges[0] && !ranges[1]) continue;
      if (!ranges[0]) throw Error(ErrorCode::parse, "right key without left key");
      NodeSlot s;
      s.left = KeyEntry{*ranges[0], payloads[0], false};
      if (ranges[1]) s.right = KeyEntry{*ranges[1], payloads[1], false};
      slots.emplace_back(idx, std::move(s));
    }
    auto bitmap = in.take(bytes_for_bits(2 * len));
    for (auto& [idx, s] : slots) {
      auto bit = [&](std::uint64_t b) { return (bitmap[b / 8] >> (b % 8)) & 1u; };
      s.left->valid = bit(2 * idx);
      if (s.right) s.right->valid = bit(2 * idx + 1);
    }
    parsed.push_back(std::move(slots));
  }
  Rtst t(key_width, roots);
  for (unsigned level = 0; level < parsed.size(); ++level)
    for (auto& [idx, s] : parsed[level]) t.write_node(level, level_base(level) + idx, std::move(s));
  if (t.levels_.size() < parsed.size()) t.levels_.resize(parsed.size());
  return t;
}

}  // namespace rtst
