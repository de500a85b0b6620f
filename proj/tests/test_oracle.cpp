#include "helpers.hpp"

#include "rtst/error.hpp"
#include "rtst/oracle.hpp"

#include <doctest.h>

#include <bitset>
#include <random>
#include <set>

using namespace rtst;
using namespace testutil;

namespace {

FieldSchema two_nibbles() { return FieldSchema({{"sa", 4, FieldKind::prefix}, {"da", 4, FieldKind::prefix}}); }

FieldSchema small_schema() {
  return FieldSchema({{"sa", 4, FieldKind::prefix}, {"da", 4, FieldKind::prefix}, {"p", 2, FieldKind::exact}});
}

bool prefix_of(const Prefix& p, std::uint64_t x) {
  const std::string a = std::bitset<4>(p.value).to_string(), b = std::bitset<4>(x).to_string();
  return a.substr(0, p.length) == b.substr(0, p.length);
}

Flow nib(FlowId id, std::uint64_t sa, unsigned sl, std::uint64_t da, unsigned dl, std::int64_t prio,
         std::vector<std::uint64_t> exact = {}) {
  Flow f;
  f.id = id;
  f.priority = prio;
  f.action = "a" + std::to_string(id);
  f.sa = Prefix::of(sa, sl, 4);
  f.da = Prefix::of(da, dl, 4);
  f.exact = std::move(exact);
  return f;
}

}  // namespace

TEST_CASE("oracle_classify basics") {
  OracleTable empty(tiny_schema());
  CHECK_FALSE(oracle_classify(empty, Packet{{1, 2, 3}}));
  const OracleTable one(FlowTable(tiny_schema(), {tiny_flow(4, p8(0, 1), p8(0, 0), 3, 9, "x")}));
  const auto m = oracle_classify(one, Packet{{1, 2, 3}});
  REQUIRE(m);
  CHECK(*m == OracleMatch{4, 9, "x"});
  CHECK_FALSE(oracle_classify(one, Packet{{129, 2, 3}}));
}

TEST_CASE("exhaustive 16-flow table over every packet") {
  std::vector<Flow> flows;
  for (FlowId i = 0; i < 16; ++i)
    flows.push_back(nib(i + 1, (i * 5) & 15, i % 5, (i * 11) & 15, (i / 3) % 5, static_cast<std::int64_t>(i % 3)));
  const FlowTable t(two_nibbles(), flows);
  const OracleTable o(t);

  // Match sets from bit strings.
  std::vector<std::set<std::pair<std::uint64_t, std::uint64_t>>> sets(16);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::uint64_t sa = 0; sa < 16; ++sa)
      for (std::uint64_t da = 0; da < 16; ++da)
        if (prefix_of(flows[i].sa, sa) && prefix_of(flows[i].da, da)) sets[i].insert({sa, da});
  const std::vector<std::size_t> sizes{256, 128, 64, 16, 8, 128, 32, 16, 8, 2, 32, 16, 4, 2, 1, 256};
  for (std::size_t i = 0; i < 16; ++i) CHECK(sets[i].size() == sizes[i]);

  const LookupEngine e = LookupEngine::build(t, partition(t));
  for (std::uint64_t sa = 0; sa < 16; ++sa)
    for (std::uint64_t da = 0; da < 16; ++da) {
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < 16; ++i)
        if (sets[i].contains({sa, da}) && (!best || flows[i].priority > flows[*best].priority)) best = i;
      const Packet p{{sa, da}};
      const auto m = oracle_classify(o, p);
      REQUIRE(m);
      CHECK(m->id == flows[*best].id);
      CHECK(e.classify(p).flow_id == m->id);
    }
  // Worked by hand: (15,15) hits 1, 11, 16; (0,0) hits 1, 2, 6, 16;
  // (9,3) hits 1, 3, 6, 7, 16. Ties at priority 2 go to the lower id.
  CHECK(oracle_classify(o, Packet{{15, 15}})->id == 11);
  CHECK(oracle_classify(o, Packet{{0, 0}})->id == 6);
  CHECK(oracle_classify(o, Packet{{9, 3}})->id == 3);
}

TEST_CASE("oracle_search") {
  CHECK_FALSE(oracle_search({}, 5));
  const std::vector<KeyEntry> v{key(0, 3, 1), key(10, 20, 2)};
  CHECK(oracle_search(v, 10) == 2);
  CHECK(oracle_search(v, 0) == 1);
  CHECK_FALSE(oracle_search(v, 5));
  std::vector<KeyEntry> w = v;
  w[1].valid = false;
  CHECK_FALSE(oracle_search(w, 15));

  std::mt19937_64 rng(1);
  for (int round = 0; round < 10; ++round) {
    std::vector<KeyEntry> a;
    std::uint64_t lo = rng() % 10;
    while (lo < 60000 && a.size() < 400) {
      const std::uint64_t hi = std::min<std::uint64_t>(65535, lo + rng() % 50);
      a.push_back(key(lo, hi, a.size()));
      lo = hi + 1 + rng() % 100;
    }
    const Rtst t = Rtst::build_complete(16, a);
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t x = rng() % 65536;
      REQUIRE(t.search(x).payload == oracle_search(a, x));
    }
  }
}

TEST_CASE("oracle_overlap examples") {
  const FieldSchema s = small_schema();
  OracleTable o(FlowTable(s, {nib(1, 0, 1, 0, 0, 5, {2}), nib(2, 0b1000, 1, 0, 0, 5, {2})}));
  CHECK(oracle_overlap(o, nib(9, 0, 2, 0, 0, 5, {2})) == 1);
  CHECK_FALSE(oracle_overlap(o, nib(9, 0, 2, 0, 0, 5, {3})));
  CHECK_FALSE(oracle_overlap(o, nib(9, 0, 2, 0, 0, 6, {2})));
  // Covers both stored flows: the lower id is named.
  CHECK(oracle_overlap(o, nib(9, 0, 0, 0, 0, 5, {2})) == 1);
  o.apply(UpdateOp{UpdateKind::remove, nib(1, 0, 1, 0, 0, 5, {2}), {}});
  CHECK(oracle_overlap(o, nib(9, 0, 0, 0, 0, 5, {2})) == 2);
}

TEST_CASE("oracle_overlap agrees with a packet-level pair scan") {
  const FieldSchema s = small_schema();
  std::mt19937_64 rng(55);
  for (int round = 0; round < 30; ++round) {
    std::vector<Flow> flows;
    for (FlowId id = 1; id <= 12; ++id)
      flows.push_back(nib(id, rng(), rng() % 5, rng(), rng() % 5, static_cast<std::int64_t>(rng() % 2), {rng() % 2}));
    const OracleTable o(FlowTable(s, flows));
    for (int q = 0; q < 20; ++q) {
      const Flow f = nib(100, rng(), rng() % 5, rng(), rng() % 5, static_cast<std::int64_t>(rng() % 2), {rng() % 2});
      std::optional<FlowId> want;
      for (const Flow& g : flows) {
        if (g.priority != f.priority) continue;
        bool shared = false;
        for (std::uint64_t sa = 0; sa < 16 && !shared; ++sa)
          for (std::uint64_t da = 0; da < 16 && !shared; ++da)
            for (std::uint64_t p = 0; p < 4 && !shared; ++p) {
              const Packet pkt{{sa, da, p}};
              shared = flow_matches(s, f, pkt) && flow_matches(s, g, pkt);
            }
        if (shared && (!want || g.id < *want)) want = g.id;
      }
      REQUIRE(oracle_overlap(o, f) == want);
    }
  }
}

TEST_CASE("OracleTable verdicts") {
  const FieldSchema s = tiny_schema();
  OracleTable o(FlowTable(s, {tiny_flow(1, p8(0, 1), p8(0, 0), 6), tiny_flow(2, p8(0x80, 1), p8(0, 0), 6)}));
  CHECK(o.live_count() == 2);

  Flow m = tiny_flow(1, p8(0, 1), p8(0, 0), 6, 0, "new");
  CHECK(o.apply(UpdateOp{UpdateKind::modify, m, {}}).accepted);
  CHECK(oracle_classify(o, Packet{{1, 1, 6}})->action == "new");

  const auto missing = o.apply(UpdateOp{UpdateKind::modify, tiny_flow(1, p8(0, 2), p8(0, 0), 6), {}});
  CHECK(missing.refusal == ErrorCode::not_found);

  Flow dup = tiny_flow(7, p8(0x80, 1), p8(0, 0), 6);
  auto r = o.apply(UpdateOp{UpdateKind::insert, dup, {}});
  CHECK(r.refusal == ErrorCode::duplicate);
  CHECK(r.other == 2);

  r = o.apply(UpdateOp{UpdateKind::insert, tiny_flow(2, p8(0x40, 2), p8(0, 0), 7), {}});
  CHECK(r.refusal == ErrorCode::duplicate);
  CHECK(r.other == 2);

  r = o.apply(UpdateOp{UpdateKind::insert, tiny_flow(9, p8(0, 0), p8(0, 0), 6), {}});
  CHECK(r.refusal == ErrorCode::conflict);
  CHECK(r.other == 1);

  r = o.apply(UpdateOp{UpdateKind::insert, tiny_flow(9, p8(0, 0), p8(0, 0), 300), {}});
  CHECK(r.refusal == ErrorCode::invalid_argument);

  CHECK(o.apply(UpdateOp{UpdateKind::remove, tiny_flow(2, p8(0x80, 1), p8(0, 0), 6), {}}).accepted);
  CHECK(o.live_count() == 1);
  CHECK(o.apply(UpdateOp{UpdateKind::remove, tiny_flow(2, p8(0x80, 1), p8(0, 0), 6), {}}).refusal ==
        ErrorCode::not_found);
  // The id is free again.
  CHECK(o.apply(UpdateOp{UpdateKind::insert, tiny_flow(2, p8(0x40, 2), p8(0, 0), 7), {}}).accepted);
}
