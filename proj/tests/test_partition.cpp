#include "helpers.hpp"

#include "rtst/error.hpp"
#include "rtst/generator.hpp"
#include "rtst/partition.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

using namespace rtst;
using namespace testutil;

namespace {

FieldSchema nibble_schema() {
  return FieldSchema({{"sa", 4, FieldKind::prefix}, {"da", 4, FieldKind::prefix}, {"proto", 8, FieldKind::exact}});
}

Flow nibble_flow(FlowId id, Prefix sa, Prefix da, std::uint64_t proto) {
  Flow f;
  f.id = id;
  f.sa = sa;
  f.da = da;
  f.exact = {proto};
  return f;
}

}  // namespace

TEST_CASE("dst_key examples") {
  const FieldSchema s = nibble_schema();
  const Flow f = nibble_flow(1, Prefix(0, 0, 4), Prefix(0b1000, 2, 4), 6);
  CHECK(dst_key(s, f) == Range(104, 107, 12));

  // Enumerate every DA and confirm the matching keys form that interval.
  std::vector<std::uint64_t> hits;
  for (std::uint64_t da = 0; da < 16; ++da)
    if (flow_matches(s, f, Packet{{0, da, 6}})) hits.push_back(6 << 4 | da);
  REQUIRE(hits.size() == 4);
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i] == hits[i - 1] + 1);
  CHECK(Wide(hits.front()) == dst_key(s, f).lo);
  CHECK(Wide(hits.back()) == dst_key(s, f).hi);

  const Flow exact = nibble_flow(2, Prefix(0, 0, 4), Prefix(0b0101, 4, 4), 9);
  CHECK(dst_key(s, exact).lo == dst_key(s, exact).hi);
  CHECK(dst_key(s, exact).lo == Wide(9 << 4 | 5));

  const Flow wild = nibble_flow(3, Prefix(0, 0, 4), Prefix(0, 0, 4), 6);
  CHECK(dst_key(s, wild) == Range(6 << 4, 6 << 4 | 15, 12));
}

TEST_CASE("dst_key and dst_value agree with flow_matches") {
  const FieldSchema s = FieldSchema::openflow();
  GenConfig cfg;
  cfg.n_flows = 200;
  cfg.n_packets = 5000;
  cfg.seed = 4;
  const FlowTable t = generate_table(cfg);
  const auto packets = generate_packets(cfg, t);
  int hits = 0;
  for (const Packet& p : packets)
    for (const Flow& f : t.flows) {
      const bool split = range_from_prefix(f.sa).contains(p.values[s.sa_index()]) &&
                         dst_key(s, f).contains(dst_value(s, p));
      const bool whole = flow_matches(s, f, p);
      hits += whole;
      REQUIRE(split == whole);
    }
  CHECK(hits > 1000);
}

TEST_CASE("dst_key is order-consistent") {
  const FieldSchema s = tiny_schema();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 5000; ++i) {
    const Flow a = tiny_flow(1, p8(0, 0), p8(rng(), rng() % 9), rng() % 3);
    const Flow b = tiny_flow(2, p8(0, 0), p8(rng(), rng() % 9), rng() % 3);
    bool remainder_disjoint = a.exact != b.exact || !range_from_prefix(a.da).intersects(range_from_prefix(b.da));
    CHECK(remainder_disjoint == !dst_key(s, a).intersects(dst_key(s, b)));
    if (a.exact == b.exact && a.da == b.da) CHECK(dst_key(s, a) == dst_key(s, b));
  }
}

TEST_CASE("partition examples") {
  const FieldSchema s = tiny_schema();
  SUBCASE("shared SA, distinct remainders") {
    FlowTable t(s);
    for (FlowId i = 0; i < 10; ++i) t.flows.push_back(tiny_flow(i, p8(0x40, 2), p8(0, 0), i));
    const GroupPlan p = partition(t);
    CHECK(p.k() == 1);
    CHECK(p.groups[0].size() == 10);
  }
  SUBCASE("nested SA prefixes") {
    FlowTable t(s, {tiny_flow(1, p8(0, 1), p8(0, 0), 6), tiny_flow(2, p8(0, 2), p8(0, 0), 6)});
    const GroupPlan p = partition(t);
    CHECK(p.k() == 2);
    // 00* sorts first, so the wider prefix opens the second group.
    CHECK(p.groups[0] == std::vector<FlowId>{2});
    CHECK(p.groups[1] == std::vector<FlowId>{1});
    try {
      partition(t, 1);
      FAIL("expected infeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::infeasible);
      CHECK(e.flow_id() == 1);
    }
    CHECK(partition(t, 2).k() == 2);
  }
  SUBCASE("same SA, overlapping remainders") {
    FlowTable t(s, {tiny_flow(1, p8(0, 1), p8(0, 1), 6), tiny_flow(2, p8(0, 1), p8(0, 2), 6, 3)});
    CHECK(partition(t).k() == 2);
  }
  SUBCASE("empty table") {
    FlowTable t(s);
    CHECK(partition(t).k() == 0);
    CHECK(partition(t, 0).k() == 0);
    t.flows.push_back(tiny_flow(1, p8(0, 1), p8(0, 0), 6));
    CHECK_THROWS_AS(partition(t, 0), Error);
  }
}

TEST_CASE("disjoint random flows need one group") {
  GenConfig cfg;
  cfg.disjoint_sa = true;
  cfg.n_flows = 1024;
  const FlowTable t = generate_table(cfg);
  const GroupPlan p = partition(t);
  CHECK(p.k() == 1);
  CHECK(expected_height(p.groups[0].size()) == 7);
}

TEST_CASE("target k yields exactly k valid groups") {
  GenConfig cfg;
  cfg.disjoint_sa = true;
  cfg.n_flows = 300;
  const FlowTable t = generate_table(cfg);
  for (std::size_t k : {1, 2, 4, 8}) {
    const GroupPlan p = partition(t, k);
    CHECK(p.k() == k);
    CHECK_NOTHROW(validate_plan(t, p));
    std::size_t lo = t.flows.size(), hi = 0;
    for (const auto& g : p.groups) {
      lo = std::min(lo, g.size());
      hi = std::max(hi, g.size());
    }
    // Unique SAs spread evenly.
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("partition is a disjoint cover with one match per group") {
  GenConfig cfg;
  cfg.n_flows = 1024;
  cfg.n_packets = 10000;
  cfg.seed = 12;
  cfg.sa_reuse = 0.3;
  const FlowTable t = generate_table(cfg);
  const GroupPlan p = partition(t);
  CHECK_NOTHROW(validate_plan(t, p));
  std::set<FlowId> seen;
  std::size_t total = 0;
  for (const auto& g : p.groups) {
    total += g.size();
    seen.insert(g.begin(), g.end());
  }
  CHECK(total == t.flows.size());
  CHECK(seen.size() == t.flows.size());

  std::map<FlowId, std::size_t> group_of;
  for (std::size_t g = 0; g < p.k(); ++g)
    for (FlowId id : p.groups[g]) group_of[id] = g;
  for (const Packet& pkt : generate_packets(cfg, t)) {
    std::vector<int> per_group(p.k(), 0);
    for (const Flow& f : t.flows)
      if (flow_matches(t.schema, f, pkt)) ++per_group[group_of.at(f.id)];
    for (int c : per_group) REQUIRE(c <= 1);
  }
}

TEST_CASE("one match per group on a dense small table") {
  // 8-bit fields with few exact values: most packets match several flows.
  const FieldSchema s = tiny_schema();
  std::mt19937_64 rng(21);
  FlowTable t(s);
  for (FlowId id = 1; t.flows.size() < 120; ++id) {
    const Flow f = tiny_flow(id, p8(rng(), rng() % 9), p8(rng(), rng() % 9), rng() % 2, static_cast<int>(rng() % 4));
    if (std::none_of(t.flows.begin(), t.flows.end(), [&](const Flow& g) { return overlap_check(f, g); }))
      t.flows.push_back(f);
  }
  const GroupPlan p = partition(t);
  CHECK(p.k() > 1);
  std::map<FlowId, std::size_t> group_of;
  for (std::size_t g = 0; g < p.k(); ++g)
    for (FlowId id : p.groups[g]) group_of[id] = g;
  std::size_t multi = 0;
  for (std::uint64_t sa = 0; sa < 256; ++sa)
    for (std::uint64_t da = 0; da < 256; ++da) {
      const Packet pkt{{sa, da, (sa ^ da) & 1}};
      std::vector<int> per_group(p.k(), 0);
      int matches = 0;
      for (const Flow& f : t.flows)
        if (flow_matches(s, f, pkt)) {
          ++per_group[group_of.at(f.id)];
          ++matches;
        }
      for (int c : per_group) REQUIRE(c <= 1);
      multi += matches > 1;
    }
  CHECK(multi > 1000);
}

TEST_CASE("validate_plan rejects bad plans") {
  const FieldSchema s = tiny_schema();
  FlowTable t(s, {tiny_flow(1, p8(0, 1), p8(0, 0), 6), tiny_flow(2, p8(0, 2), p8(0, 0), 6)});
  CHECK_THROWS_AS(validate_plan(t, GroupPlan{{{1, 2}}}), Error);
  CHECK_THROWS_AS(validate_plan(t, GroupPlan{{{1}}}), Error);
  CHECK_THROWS_AS(validate_plan(t, GroupPlan{{{1}, {2}, {3}}}), Error);
  CHECK_THROWS_AS(validate_plan(t, GroupPlan{{{1}, {1, 2}}}), Error);
  CHECK_NOTHROW(validate_plan(t, GroupPlan{{{1}, {2}}}));
}

TEST_CASE("expected_height") {
  CHECK(expected_height(8) == 2);
  CHECK(expected_height(1) == 1);
  CHECK(expected_height(1024) == 7);
  CHECK(expected_height(728) == 6);
  CHECK(expected_height(729) == 7);
  CHECK(expected_height(0) == 0);
}
