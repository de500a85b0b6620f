#pragma once

#include "rtst/engine.hpp"
#include "rtst/flow.hpp"
#include "rtst/tree.hpp"

#include <random>
#include <string>
#include <vector>

namespace testutil {

using namespace rtst;

// sa (8-bit prefix), da (8-bit prefix), proto (8-bit exact).
inline FieldSchema tiny_schema() {
  return FieldSchema({{"sa", 8, FieldKind::prefix}, {"da", 8, FieldKind::prefix}, {"proto", 8, FieldKind::exact}});
}

inline Flow tiny_flow(FlowId id, Prefix sa, Prefix da, std::uint64_t proto, std::int64_t prio = 0,
                      std::string action = "a") {
  Flow f;
  f.id = id;
  f.priority = prio;
  f.action = std::move(action);
  f.sa = sa;
  f.da = da;
  f.exact = {proto};
  return f;
}

inline Prefix p8(std::uint64_t value, unsigned len) { return Prefix::of(value, len, 8); }

inline KeyEntry key(std::uint64_t lo, std::uint64_t hi, Payload payload, unsigned width = 16) {
  return KeyEntry{Range(lo, hi, width), payload, true};
}

// n disjoint ranges [10i, 10i+4] with payload i.
inline std::vector<KeyEntry> spaced_keys(std::size_t n, unsigned width = 16) {
  std::vector<KeyEntry> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(key(10 * i, 10 * i + 4, i, width));
  return v;
}

// Every stored key, valid or not, in traversal order.
inline std::vector<KeyEntry> all_keys(const Rtst& t, Address root = 1) { return t.in_order(root); }

inline std::vector<KeyEntry> valid_keys(const Rtst& t, Address root = 1) {
  std::vector<KeyEntry> out;
  for (const KeyEntry& k : t.in_order(root))
    if (k.valid) out.push_back(k);
  return out;
}

inline bool strictly_increasing(const std::vector<KeyEntry>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!precedes(v[i - 1].range, v[i].range)) return false;
  return true;
}

// Nodes whose content differs between two tree states, counted per level.
inline std::vector<std::size_t> changed_per_level(const Rtst& before, const Rtst& after) {
  const std::size_t h = std::max(before.height(), after.height());
  std::vector<std::size_t> out(h, 0);
  for (unsigned lv = 0; lv < h; ++lv) {
    std::map<std::uint64_t, NodeSlot> a, b;
    if (lv < before.height()) a = before.levels()[lv];
    if (lv < after.height()) b = after.levels()[lv];
    for (const auto& [idx, slot] : b) {
      auto it = a.find(idx);
      if (it == a.end() || !(it->second == slot)) ++out[lv];
    }
    for (const auto& [idx, slot] : a)
      if (!b.contains(idx)) ++out[lv];
  }
  return out;
}

}  // namespace testutil
