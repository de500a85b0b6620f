#include "rtst/rtst.h"

#include "rtst/bench.hpp"
#include "rtst/error.hpp"
#include "rtst/generator.hpp"
#include "rtst/jsonio.hpp"
#include "rtst/pipeline.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <set>
#include <sstream>

struct rtst_table {
  rtst::FlowTable table;
};

struct rtst_engine {
  rtst::LookupEngine engine;
};

struct rtst_sim {
  rtst_engine* owner;
  rtst::PipelineSim sim;
};

namespace {

using rtst::Error;
using rtst::ErrorCode;
using rtst::Json;

thread_local std::string last_error = "{}";

rtst_status fail_with(ErrorCode code, const std::string& msg, std::optional<std::uint64_t> id = std::nullopt) {
  last_error = rtst::error_to_json(Error(code, msg, id)).dump();
  return static_cast<rtst_status>(code);
}

template <class F>
rtst_status guard(F&& body) {
  try {
    body();
    return RTST_OK;
  } catch (const Error& e) {
    last_error = rtst::error_to_json(e).dump();
    return static_cast<rtst_status>(e.code());
  } catch (const Json::exception& e) {
    return fail_with(ErrorCode::parse, e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(ErrorCode::internal, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(ErrorCode::internal, e.what());
  } catch (...) {
    return fail_with(ErrorCode::internal, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

Json config(const char* text, std::initializer_list<const char*> allowed) {
  if (!text || !*text) return Json::object();
  Json j = Json::parse(text);
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "configuration must be a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!keys.contains(k)) throw Error(ErrorCode::invalid_argument, "unknown configuration key \"" + k + "\"");
  return j;
}

template <class T>
void take(const Json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

#define GEN_KEYS                                                                                                 \
  "schema", "n_flows", "seed", "min_prefix", "max_prefix", "max_priority", "disjoint_sa", "sa_reuse", "n_packets", \
      "hit_fraction", "n_updates", "missing_fraction"
#define BENCH_KEYS "k", "lanes", "clock_mhz", "verify"

rtst::GenConfig gen_config(const Json& j) {
  rtst::GenConfig c;
  if (j.contains("schema")) c.schema = rtst::load_schema(j.at("schema").get<std::string>());
  take(j, "n_flows", c.n_flows);
  take(j, "seed", c.seed);
  take(j, "min_prefix", c.min_prefix);
  if (j.contains("max_prefix")) c.max_prefix = j.at("max_prefix").get<unsigned>();
  take(j, "max_priority", c.max_priority);
  take(j, "disjoint_sa", c.disjoint_sa);
  take(j, "sa_reuse", c.sa_reuse);
  take(j, "n_packets", c.n_packets);
  take(j, "hit_fraction", c.hit_fraction);
  take(j, "n_updates", c.n_updates);
  take(j, "missing_fraction", c.missing_fraction);
  c.validate();
  return c;
}

rtst::BenchOptions bench_options(const Json& j) {
  rtst::BenchOptions o;
  if (j.contains("k")) o.target_k = j.at("k").get<std::size_t>();
  take(j, "lanes", o.sim.lanes);
  take(j, "clock_mhz", o.sim.clock_mhz);
  take(j, "verify", o.verify);
  return o;
}

std::string lines(const std::vector<Json>& items) {
  std::string out;
  for (const Json& j : items) out += j.dump() + '\n';
  return out;
}

template <class T, class F>
std::vector<T> parse_lines(const char* text, F&& reader) {
  if (!text) return {};
  std::istringstream in(text);
  return reader(in);
}

std::optional<std::size_t> target(int64_t k) {
  if (k < 0) return std::nullopt;
  return static_cast<std::size_t>(k);
}

}  // namespace

extern "C" {

const char* rtst_status_name(rtst_status s) {
  if (s == RTST_OK) return "ok";
  if (s < RTST_E_INVALID_ARGUMENT || s > RTST_E_INTERNAL) return "unknown";
  return rtst::error_code_name(static_cast<ErrorCode>(s));
}

const char* rtst_last_error_json(void) { return last_error.c_str(); }

void rtst_string_free(char* s) { std::free(s); }

rtst_status rtst_generate(const char* config_json, char** flows_jsonl, char** packets_jsonl, char** updates_jsonl) {
  return guard([&] {
    const rtst::GenConfig c = gen_config(config(config_json, {GEN_KEYS}));
    const rtst::FlowTable t = rtst::generate_table(c);
    std::ostringstream f, p, u;
    rtst::write_flows(f, t);
    if (packets_jsonl) rtst::write_packets(p, t.schema, rtst::generate_packets(c, t));
    if (updates_jsonl) rtst::write_updates(u, t.schema, rtst::generate_updates(c, t));
    put(flows_jsonl, f.str());
    put(packets_jsonl, p.str());
    put(updates_jsonl, u.str());
  });
}

rtst_status rtst_table_parse(const char* schema, const char* flows_jsonl, rtst_table** out) {
  return guard([&] {
    require(out, "out");
    require(flows_jsonl, "flows");
    std::istringstream in(flows_jsonl);
    auto t = std::make_unique<rtst_table>(rtst_table{rtst::read_flows(rtst::load_schema(schema ? schema : "openflow"), in)});
    *out = t.release();
  });
}

size_t rtst_table_size(const rtst_table* t) { return t ? t->table.flows.size() : 0; }

void rtst_table_free(rtst_table* t) { delete t; }

rtst_status rtst_plan(const rtst_table* t, int64_t target_k, char** plan_json) {
  return guard([&] {
    require(t, "table");
    put(plan_json, rtst::plan_to_json(rtst::partition(t->table, target(target_k))).dump());
  });
}

rtst_status rtst_engine_build(const rtst_table* t, const char* plan_json, int64_t target_k, rtst_engine** out) {
  return guard([&] {
    require(t, "table");
    require(out, "out");
    const rtst::GroupPlan plan =
        plan_json ? rtst::plan_from_json(Json::parse(plan_json)) : rtst::partition(t->table, target(target_k));
    auto e = std::make_unique<rtst_engine>(rtst_engine{rtst::LookupEngine::build(t->table, plan)});
    *out = e.release();
  });
}

void rtst_engine_free(rtst_engine* e) { delete e; }

rtst_status rtst_engine_info(const rtst_engine* e, char** info_json) {
  return guard([&] {
    require(e, "engine");
    const rtst::LookupEngine& en = e->engine;
    const rtst::MemoryFootprint m = en.memory();
    const double n = static_cast<double>(en.flow_count());
    Json j{{"flows", en.flow_count()},
           {"k", en.group_count()},
           {"header_bits", en.schema().header_bits()},
           {"sst_height", en.sst_height()},
           {"dst_height", en.dst_height()},
           {"data_bits", m.data_bits},
           {"overhead_bits", m.overhead_bits},
           {"data_bytes_per_flow", n > 0 ? m.data_bytes() / n : 0.0},
           {"overhead_bytes_per_flow", n > 0 ? m.overhead_bytes() / n : 0.0}};
    Json groups = Json::array();
    for (std::size_t g = 0; g < en.group_count(); ++g)
      groups.push_back({{"group", g},
                        {"sa_prefixes", en.group(g).sst.key_count()},
                        {"sst_height", en.group(g).sst.height()},
                        {"dst_height", en.group(g).dst.height()}});
    j["groups"] = std::move(groups);
    put(info_json, j.dump());
  });
}

rtst_status rtst_engine_dump(const rtst_engine* e, char** dump_json) {
  return guard([&] {
    require(e, "engine");
    put(dump_json, rtst::engine_to_json(e->engine).dump());
  });
}

rtst_status rtst_engine_classify(const rtst_engine* e, const char* packets_jsonl, int with_traces,
                                 char** results_jsonl) {
  return guard([&] {
    require(e, "engine");
    const auto pkts = parse_lines<rtst::Packet>(
        packets_jsonl, [&](std::istream& in) { return rtst::read_packets(e->engine.schema(), in); });
    std::vector<Json> out;
    out.reserve(pkts.size());
    for (std::size_t i = 0; i < pkts.size(); ++i)
      out.push_back(rtst::classify_to_json(e->engine.classify(pkts[i], with_traces != 0), i));
    put(results_jsonl, lines(out));
  });
}

rtst_status rtst_engine_replay(rtst_engine* e, const char* updates_jsonl, const char* check_jsonl,
                               char** outcomes_jsonl, char** summary_json) {
  return guard([&] {
    require(e, "engine");
    const auto& schema = e->engine.schema();
    const auto ops = parse_lines<rtst::UpdateOp>(updates_jsonl, [&](std::istream& in) { return rtst::read_updates(schema, in); });
    const auto check = parse_lines<rtst::Packet>(check_jsonl, [&](std::istream& in) { return rtst::read_packets(schema, in); });
    const rtst::ReplayResult r = rtst::replay_updates(e->engine, ops, check);
    std::vector<Json> out;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      out.push_back(rtst::update_outcome_to_json(i, ops[i], r.outcomes[i]));
      accepted += r.outcomes[i].accepted ? 1 : 0;
    }
    put(outcomes_jsonl, lines(out));
    put(summary_json, Json{{"ops", ops.size()},
                           {"accepted", accepted},
                           {"refused", ops.size() - accepted},
                           {"oracle_verdict_mismatches", r.verdict_mismatches},
                           {"peak_level_writes", r.peak_level_writes},
                           {"packets_checked", r.packets_checked},
                           {"oracle_classify_mismatches", r.classify_mismatches},
                           {"flows", e->engine.flow_count()},
                           {"k", e->engine.group_count()}}
                          .dump());
  });
}

rtst_status rtst_sim_create(rtst_engine* e, const char* config_json, rtst_sim** out) {
  return guard([&] {
    require(e, "engine");
    require(out, "out");
    const Json j = config(config_json, {"lanes", "clock_mhz", "spare_sst_stages", "spare_dst_stages"});
    rtst::PipelineConfig c;
    take(j, "lanes", c.lanes);
    take(j, "clock_mhz", c.clock_mhz);
    take(j, "spare_sst_stages", c.spare_sst_stages);
    take(j, "spare_dst_stages", c.spare_dst_stages);
    auto s = std::make_unique<rtst_sim>(rtst_sim{e, rtst::PipelineSim(e->engine, c)});
    *out = s.release();
  });
}

void rtst_sim_free(rtst_sim* s) { delete s; }

rtst_status rtst_sim_run(rtst_sim* s, const char* packets_jsonl, const char* updates_jsonl, char** outcomes_jsonl,
                         char** report_json) {
  return guard([&] {
    require(s, "simulator");
    const auto& schema = s->owner->engine.schema();
    const auto pkts = parse_lines<rtst::Packet>(packets_jsonl, [&](std::istream& in) { return rtst::read_packets(schema, in); });
    const auto ops = parse_lines<rtst::UpdateOp>(updates_jsonl, [&](std::istream& in) { return rtst::read_updates(schema, in); });
    const rtst::StreamResult r = rtst::run_stream(s->owner->engine, s->sim, pkts, ops);
    std::vector<Json> out;
    out.reserve(r.packets.size());
    for (const auto& o : r.packets) out.push_back(rtst::outcome_to_json(o));
    put(outcomes_jsonl, lines(out));
    Json updates = Json::array();
    for (std::size_t i = 0; i < ops.size(); ++i) {
      Json u = rtst::update_outcome_to_json(i, ops[i], r.updates[i]);
      if (r.update_cycles[i]) u["cycle"] = *r.update_cycles[i];
      updates.push_back(std::move(u));
    }
    Json rep = rtst::stats_to_json(r.stats);
    rep["latency_cycles"] = s->sim.latency();
    rep["resolver_cycles"] = s->sim.config().resolver_cycles;
    rep["lanes"] = s->sim.config().lanes;
    rep["updates"] = std::move(updates);
    put(report_json, rep.dump());
  });
}

rtst_status rtst_bench(const rtst_table* t, const char* packets_jsonl, const char* options_json, char** report_json) {
  return guard([&] {
    require(t, "table");
    const auto pkts =
        parse_lines<rtst::Packet>(packets_jsonl, [&](std::istream& in) { return rtst::read_packets(t->table.schema, in); });
    const rtst::BenchOptions o = bench_options(config(options_json, {BENCH_KEYS}));
    put(report_json, rtst::report_to_json(rtst::bench(t->table, pkts, o)).dump());
  });
}

rtst_status rtst_sweep(const char* options_json, char** csv, char** reports_json) {
  return guard([&] {
    const Json j = config(options_json, {GEN_KEYS, BENCH_KEYS, "ns", "ks"});
    Json gen = Json::object(), bench = Json::object();
    for (const auto& [k, v] : j.items()) {
      if (k == "ns" || k == "ks") continue;
      if (k == "k" || k == "lanes" || k == "clock_mhz" || k == "verify")
        bench[k] = v;
      else
        gen[k] = v;
    }
    if (bench.contains("k")) throw Error(ErrorCode::invalid_argument, "sweep takes \"ks\", not \"k\"");
    const std::vector<std::size_t> ns = j.value("ns", std::vector<std::size_t>{128, 256, 512, 1024});
    const std::vector<std::size_t> ks = j.value("ks", std::vector<std::size_t>{1, 2, 4, 8});
    const auto rows = rtst::sweep(gen_config(gen), ns, ks, bench_options(bench));
    put(csv, rtst::sweep_csv(rows));
    Json all = Json::array();
    for (const auto& r : rows) all.push_back(rtst::report_to_json(r));
    put(reports_json, all.dump());
  });
}

}  // extern "C"
