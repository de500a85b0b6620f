#include "rtst/generator.hpp"

#include "rtst/error.hpp"
#include "rtst/oracle.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

namespace rtst {

namespace {

// Independent stream per output kind so that, e.g., asking for more packets
// leaves the table unchanged.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t kind) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kind)};
  return std::mt19937_64(seq);
}

std::uint64_t mask(unsigned bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

class Drawer {
 public:
  Drawer(const GenConfig& cfg, std::mt19937_64& rng) : cfg_(cfg), rng_(rng) {}

  std::uint64_t bits(unsigned width) { return rng_() & mask(width); }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  Prefix prefix(unsigned width) {
    const unsigned hi = std::min(width, cfg_.max_prefix.value_or(width));
    const unsigned lo = std::min(cfg_.min_prefix, hi);
    const unsigned len = std::uniform_int_distribution<unsigned>(lo, hi)(rng_);
    return Prefix::of(bits(width), len, width);
  }

  std::int64_t priority() { return std::uniform_int_distribution<std::int64_t>(0, cfg_.max_priority)(rng_); }

  Flow flow(FlowId id) {
    const FieldSchema& s = cfg_.schema;
    Flow f;
    f.id = id;
    f.priority = priority();
    f.action = "out:" + std::to_string(rng_() % 64);
    f.sa = prefix(s.sa_width());
    f.da = prefix(s.da_width());
    for (std::size_t idx : s.exact_indices()) f.exact.push_back(bits(s.fields()[idx].width_bits));
    return f;
  }

  std::uint64_t inside(const Prefix& p) { return p.value | (bits(p.width) & mask(p.width - p.length)); }

 private:
  const GenConfig& cfg_;
  std::mt19937_64& rng_;
};

bool disjoint_from(const std::map<Wide, Wide>& set, const Range& r) {
  auto it = set.upper_bound(r.lo);
  if (it != set.end() && it->first <= r.hi) return false;
  if (it != set.begin() && std::prev(it)->second >= r.lo) return false;
  return true;
}

}  // namespace

void GenConfig::validate() const {
  if (max_prefix && *max_prefix < min_prefix)
    throw Error(ErrorCode::invalid_argument, "max prefix length below min prefix length");
  if (max_priority < 0) throw Error(ErrorCode::invalid_argument, "max priority must be non-negative");
  for (double p : {sa_reuse, hit_fraction, missing_fraction})
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::invalid_argument, "fractions must lie in [0, 1]");
}

FlowTable generate_table(const GenConfig& cfg) {
  cfg.validate();
  auto rng = stream(cfg.seed, 1);
  Drawer draw(cfg, rng);
  FlowTable table(cfg.schema);
  std::set<std::pair<std::uint64_t, unsigned>> sa_seen;
  std::map<Wide, Wide> sa_used;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> by_priority;
  constexpr int kAttempts = 10000;

  for (std::size_t i = 0; i < cfg.n_flows; ++i) {
    Flow f;
    bool ok = false;
    for (int attempt = 0; attempt < kAttempts && !ok; ++attempt) {
      f = draw.flow(i + 1);
      const bool reuse = !table.flows.empty() && draw.unit() < cfg.sa_reuse;
      if (reuse) {
        f.sa = table.flows[draw.index(table.flows.size())].sa;
      } else if (cfg.disjoint_sa) {
        if (!disjoint_from(sa_used, range_from_prefix(f.sa))) continue;
      } else if (sa_seen.contains({f.sa.value, f.sa.length})) {
        continue;
      }
      ok = std::none_of(by_priority[f.priority].begin(), by_priority[f.priority].end(),
                        [&](std::size_t j) { return overlap_check(f, table.flows[j]); });
    }
    if (!ok) throw Error(ErrorCode::infeasible, "could not draw flow " + std::to_string(i + 1));
    const Range sa = range_from_prefix(f.sa);
    sa_used.emplace(sa.lo, sa.hi);
    sa_seen.insert({f.sa.value, f.sa.length});
    by_priority[f.priority].push_back(table.flows.size());
    table.flows.push_back(std::move(f));
  }
  return table;
}

std::vector<Packet> generate_packets(const GenConfig& cfg, const FlowTable& table) {
  cfg.validate();
  auto rng = stream(cfg.seed, 2);
  Drawer draw(cfg, rng);
  const FieldSchema& s = table.schema;
  std::vector<Packet> out;
  out.reserve(cfg.n_packets);
  for (std::size_t i = 0; i < cfg.n_packets; ++i) {
    Packet p;
    p.values.resize(s.size());
    if (!table.flows.empty() && draw.unit() < cfg.hit_fraction) {
      const Flow& f = table.flows[draw.index(table.flows.size())];
      p.values[s.sa_index()] = draw.inside(f.sa);
      p.values[s.da_index()] = draw.inside(f.da);
      const auto exact = s.exact_indices();
      for (std::size_t j = 0; j < exact.size(); ++j) p.values[exact[j]] = f.exact[j];
    } else {
      for (std::size_t j = 0; j < s.size(); ++j) p.values[j] = draw.bits(s.fields()[j].width_bits);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<UpdateOp> generate_updates(const GenConfig& cfg, const FlowTable& table) {
  cfg.validate();
  auto rng = stream(cfg.seed, 3);
  Drawer draw(cfg, rng);
  OracleTable shadow(table);
  FlowId next_id = 1;
  for (const Flow& f : table.flows) next_id = std::max(next_id, f.id + 1);

  std::vector<UpdateOp> ops;
  ops.reserve(cfg.n_updates);
  for (std::size_t i = 0; i < cfg.n_updates; ++i) {
    std::vector<const Flow*> live;
    for (const OracleEntry& e : shadow.entries())
      if (e.valid) live.push_back(&e.flow);
    UpdateOp op;
    const double r = draw.unit();
    op.kind = r < 0.3 ? UpdateKind::modify : r < 0.6 ? UpdateKind::remove : UpdateKind::insert;

    if (op.kind != UpdateKind::insert) {
      if (live.empty() || draw.unit() < cfg.missing_fraction)
        op.flow = draw.flow(next_id);
      else
        op.flow = *live[draw.index(live.size())];
      if (op.kind == UpdateKind::modify) op.flow.action = "act:" + std::to_string(i);
    } else {
      const double s = draw.unit();
      if (live.empty() || s < 0.5) {
        op.flow = draw.flow(next_id++);
      } else {
        const Flow& base = *live[draw.index(live.size())];
        op.flow = base;
        op.flow.id = next_id++;
        op.flow.action = "ins:" + std::to_string(i);
        if (s < 0.85) {
          // A covering SA prefix: overlaps the base unless the priority moves.
          const unsigned len = base.sa.length == 0 ? 0 : static_cast<unsigned>(draw.index(base.sa.length));
          op.flow.sa = Prefix::of(base.sa.value, len, base.sa.width);
          if (s >= 0.7) op.flow.priority = base.priority + 1 + static_cast<std::int64_t>(draw.index(5));
        }
        // Otherwise an exact duplicate of a stored rule under a new id.
      }
    }
    shadow.apply(op);
    ops.push_back(std::move(op));
  }
  return ops;
}

}  // namespace rtst
