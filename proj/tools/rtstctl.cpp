// rtstctl: command-line front end over the C API.

#include "rtst/rtst.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using Json = nlohmann::ordered_json;

struct Failure {
  int code;
  std::string json;
};

void check(rtst_status s) {
  if (s != RTST_OK) throw Failure{static_cast<int>(s), rtst_last_error_json()};
}

[[noreturn]] void fail(rtst_status s, const std::string& msg) {
  throw Failure{static_cast<int>(s), Json{{"error", rtst_status_name(s)}, {"message", msg}}.dump()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(RTST_E_IO, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(RTST_E_IO, "cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

// Takes ownership of a string returned by the library.
std::string own(char* s) {
  std::string out = s ? s : "";
  rtst_string_free(s);
  return out;
}

struct Table {
  rtst_table* t = nullptr;
  ~Table() { rtst_table_free(t); }
};
struct Engine {
  rtst_engine* e = nullptr;
  ~Engine() { rtst_engine_free(e); }
};
struct Sim {
  rtst_sim* s = nullptr;
  ~Sim() { rtst_sim_free(s); }
};

// Options shared by every command that builds an engine.
struct Source {
  std::string schema = "openflow";
  std::string flows;
  std::string plan;
  int64_t k = -1;

  void add(CLI::App* cmd, bool with_plan = true) {
    cmd->add_option("--schema", schema, "openflow, five_tuple, or a schema JSON file")->capture_default_str();
    cmd->add_option("--flows", flows, "flow table (line JSON)")->required();
    if (!with_plan) return;
    auto* p = cmd->add_option("--plan", plan, "group plan JSON (from `plan`)");
    cmd->add_option("--k", k, "number of groups; omitted means greedy first-fit")->excludes(p);
  }

  void load(Table& t) const { check(rtst_table_parse(schema.c_str(), slurp(flows).c_str(), &t.t)); }

  void build(Table& t, Engine& e) const {
    load(t);
    const std::string p = plan.empty() ? std::string() : slurp(plan);
    check(rtst_engine_build(t.t, plan.empty() ? nullptr : p.c_str(), k, &e.e));
  }
};

struct GenFlags {
  std::string schema = "openflow";
  std::size_t n = 1024;
  std::uint64_t seed = 1;
  unsigned min_prefix = 8;
  std::optional<unsigned> max_prefix;
  std::int64_t max_priority = 1023;
  bool disjoint_sa = false;
  double sa_reuse = 0.0;
  std::size_t packets = 10000;
  double hit_fraction = 0.5;
  std::size_t updates = 1000;
  double missing_fraction = 0.15;

  void add(CLI::App* cmd) {
    cmd->add_option("--schema", schema, "openflow, five_tuple, or a schema JSON file")->capture_default_str();
    cmd->add_option("--n", n, "number of flows")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--min-prefix", min_prefix, "shortest SA/DA prefix")->capture_default_str();
    cmd->add_option("--max-prefix", max_prefix, "longest SA/DA prefix (default: field width)");
    cmd->add_option("--max-priority", max_priority)->capture_default_str();
    cmd->add_flag("--disjoint-sa", disjoint_sa, "pairwise disjoint SA prefixes");
    cmd->add_option("--sa-reuse", sa_reuse, "chance a flow reuses an earlier SA prefix")->capture_default_str();
    cmd->add_option("--hit-fraction", hit_fraction, "share of packets drawn inside a flow")->capture_default_str();
    cmd->add_option("--missing-fraction", missing_fraction, "share of modify/delete ops on absent flows")
        ->capture_default_str();
  }

  Json config() const {
    Json j{{"schema", schema},         {"n_flows", n},           {"seed", seed},
           {"min_prefix", min_prefix}, {"max_priority", max_priority}, {"disjoint_sa", disjoint_sa},
           {"sa_reuse", sa_reuse},     {"n_packets", packets},   {"hit_fraction", hit_fraction},
           {"n_updates", updates},     {"missing_fraction", missing_fraction}};
    if (max_prefix) j["max_prefix"] = *max_prefix;
    return j;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Flow-table lookup with range-based ternary search trees"};
  app.require_subcommand(1);

  // gen
  GenFlags gen;
  std::string gen_flows, gen_packets, gen_updates;
  auto* c_gen = app.add_subcommand("gen", "generate a flow table, packet trace and update trace");
  gen.add(c_gen);
  c_gen->add_option("--packets", gen.packets, "packets in the trace")->capture_default_str();
  c_gen->add_option("--updates", gen.updates, "ops in the update trace")->capture_default_str();
  c_gen->add_option("--out-flows", gen_flows, "flow table output")->required();
  c_gen->add_option("--out-packets", gen_packets, "packet trace output");
  c_gen->add_option("--out-updates", gen_updates, "update trace output");

  // plan
  Source plan_src;
  std::int64_t plan_k = -1;
  std::string plan_out;
  auto* c_plan = app.add_subcommand("plan", "partition a flow table into groups of disjoint flows");
  plan_src.add(c_plan, false);
  c_plan->add_option("--k", plan_k, "exact number of groups");
  c_plan->add_option("--out", plan_out, "plan JSON output (default stdout)");

  // build
  Source build_src;
  std::string build_out;
  auto* c_build = app.add_subcommand("build", "build the engine and report its shape and memory");
  build_src.add(c_build);
  c_build->add_option("--out", build_out, "info JSON output (default stdout)");

  // classify
  Source cls_src;
  std::string cls_packets, cls_out;
  bool cls_traces = false;
  auto* c_cls = app.add_subcommand("classify", "classify a packet trace");
  cls_src.add(c_cls);
  c_cls->add_option("--packets", cls_packets, "packet trace")->required();
  c_cls->add_flag("--traces", cls_traces, "include per-group tree traces");
  c_cls->add_option("--out", cls_out, "results output (default stdout)");

  // sim
  Source sim_src;
  std::string sim_packets, sim_updates, sim_report, sim_outcomes;
  double clock = 337.0;
  unsigned lanes = 2;
  std::optional<unsigned> spare;
  auto* c_sim = app.add_subcommand("sim", "run the cycle-level pipeline model");
  sim_src.add(c_sim);
  c_sim->add_option("--packets", sim_packets, "packet trace")->required();
  c_sim->add_option("--updates", sim_updates, "update trace interleaved with the packets");
  c_sim->add_option("--clock-mhz", clock, "clock used for the MPPS projection")->capture_default_str();
  c_sim->add_option("--lanes", lanes, "packets per cycle (1 or 2)")->capture_default_str();
  c_sim->add_option("--spare-stages", spare, "extra stages per tree for updates that deepen it (default 2 with --updates)");
  c_sim->add_option("--report", sim_report, "report JSON output (default stdout)");
  c_sim->add_option("--outcomes", sim_outcomes, "per-packet results output");

  // bench
  Source bench_src;
  std::string bench_packets, bench_report, bench_csv;
  bool bench_sweep = false;
  GenFlags sweep_gen;
  std::vector<std::size_t> ns{128, 256, 512, 1024}, ks{1, 2, 4, 8};
  double bench_clock = 337.0;
  unsigned bench_lanes = 2;
  auto* c_bench = app.add_subcommand("bench", "measure memory, latency and throughput");
  c_bench->add_option("--schema", bench_src.schema, "openflow, five_tuple, or a schema JSON file")->capture_default_str();
  c_bench->add_option("--flows", bench_src.flows, "flow table (not with --sweep)");
  c_bench->add_option("--packets", bench_packets, "packet trace (not with --sweep)");
  c_bench->add_option("--k", bench_src.k, "number of groups");
  c_bench->add_option("--clock-mhz", bench_clock)->capture_default_str();
  c_bench->add_option("--lanes", bench_lanes)->capture_default_str();
  c_bench->add_flag("--sweep", bench_sweep, "generate tables and run every (n, k) pair");
  c_bench->add_option("--ns", ns, "sweep table sizes")->delimiter(',')->capture_default_str();
  c_bench->add_option("--ks", ks, "sweep group counts")->delimiter(',')->capture_default_str();
  c_bench->add_option("--seed", sweep_gen.seed, "sweep seed")->capture_default_str();
  c_bench->add_flag("--disjoint-sa", sweep_gen.disjoint_sa, "sweep tables with disjoint SA prefixes");
  c_bench->add_option("--report", bench_report, "report JSON output (default stdout)");
  c_bench->add_option("--csv", bench_csv, "sweep CSV output");

  // replay
  Source rep_src;
  std::string rep_updates, rep_packets, rep_out, rep_summary;
  auto* c_rep = app.add_subcommand("replay", "apply an update trace and check it against the oracle");
  rep_src.add(c_rep);
  c_rep->add_option("--updates", rep_updates, "update trace")->required();
  c_rep->add_option("--packets", rep_packets, "packets for the final oracle check");
  c_rep->add_option("--out", rep_out, "per-op outcomes output (default stdout)");
  c_rep->add_option("--summary", rep_summary, "summary JSON output (default stdout, after the outcomes)");

  // dump
  Source dump_src;
  std::string dump_out;
  auto* c_dump = app.add_subcommand("dump", "print every tree level by level");
  dump_src.add(c_dump);
  c_dump->add_option("--out", dump_out, "dump JSON output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << '\n';
    return RTST_E_INVALID_ARGUMENT;
  }

  if (c_gen->parsed()) {
    char *f = nullptr, *p = nullptr, *u = nullptr;
    const std::string cfg = gen.config().dump();
    check(rtst_generate(cfg.c_str(), &f, gen_packets.empty() ? nullptr : &p, gen_updates.empty() ? nullptr : &u));
    const std::string fs = own(f), ps = own(p), us = own(u);
    emit(gen_flows, fs);
    if (!gen_packets.empty()) emit(gen_packets, ps);
    if (!gen_updates.empty()) emit(gen_updates, us);
  } else if (c_plan->parsed()) {
    Table t;
    plan_src.load(t);
    char* out = nullptr;
    check(rtst_plan(t.t, plan_k, &out));
    emit(plan_out, own(out));
  } else if (c_build->parsed()) {
    Table t;
    Engine e;
    build_src.build(t, e);
    char* out = nullptr;
    check(rtst_engine_info(e.e, &out));
    emit(build_out, own(out));
  } else if (c_cls->parsed()) {
    Table t;
    Engine e;
    cls_src.build(t, e);
    char* out = nullptr;
    check(rtst_engine_classify(e.e, slurp(cls_packets).c_str(), cls_traces ? 1 : 0, &out));
    emit(cls_out, own(out));
  } else if (c_sim->parsed()) {
    Table t;
    Engine e;
    sim_src.build(t, e);
    const unsigned sp = spare.value_or(sim_updates.empty() ? 0 : 2);
    const std::string cfg =
        Json{{"lanes", lanes}, {"clock_mhz", clock}, {"spare_sst_stages", sp}, {"spare_dst_stages", sp}}.dump();
    Sim s;
    check(rtst_sim_create(e.e, cfg.c_str(), &s.s));
    const std::string pk = slurp(sim_packets);
    const std::string up = sim_updates.empty() ? std::string() : slurp(sim_updates);
    char *outc = nullptr, *rep = nullptr;
    check(rtst_sim_run(s.s, pk.c_str(), sim_updates.empty() ? nullptr : up.c_str(),
                       sim_outcomes.empty() ? nullptr : &outc, &rep));
    if (!sim_outcomes.empty()) emit(sim_outcomes, own(outc));
    emit(sim_report, own(rep));
  } else if (c_bench->parsed()) {
    Json opts{{"lanes", bench_lanes}, {"clock_mhz", bench_clock}};
    if (bench_sweep) {
      if (!bench_src.flows.empty() || !bench_packets.empty())
        fail(RTST_E_INVALID_ARGUMENT, "--sweep generates its own tables; drop --flows/--packets");
      opts["schema"] = bench_src.schema;
      opts["seed"] = sweep_gen.seed;
      opts["disjoint_sa"] = sweep_gen.disjoint_sa;
      opts["ns"] = ns;
      opts["ks"] = ks;
      char *csv = nullptr, *rep = nullptr;
      check(rtst_sweep(opts.dump().c_str(), &csv, &rep));
      const std::string c = own(csv), r = own(rep);
      if (!bench_csv.empty()) emit(bench_csv, c);
      emit(bench_report, r);
    } else {
      if (bench_src.flows.empty() || bench_packets.empty())
        fail(RTST_E_INVALID_ARGUMENT, "bench needs --flows and --packets, or --sweep");
      if (bench_src.k >= 0) opts["k"] = bench_src.k;
      Table t;
      bench_src.load(t);
      char* rep = nullptr;
      check(rtst_bench(t.t, slurp(bench_packets).c_str(), opts.dump().c_str(), &rep));
      emit(bench_report, own(rep));
    }
  } else if (c_rep->parsed()) {
    Table t;
    Engine e;
    rep_src.build(t, e);
    const std::string up = slurp(rep_updates);
    const std::string pk = rep_packets.empty() ? std::string() : slurp(rep_packets);
    char *outc = nullptr, *sum = nullptr;
    check(rtst_engine_replay(e.e, up.c_str(), rep_packets.empty() ? nullptr : pk.c_str(), &outc, &sum));
    const std::string o = own(outc), s = own(sum);
    emit(rep_out, o);
    emit(rep_summary, s);
  } else if (c_dump->parsed()) {
    Table t;
    Engine e;
    dump_src.build(t, e);
    char* out = nullptr;
    check(rtst_engine_dump(e.e, &out));
    emit(dump_out, own(out));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    std::cerr << f.json << '\n';
    return f.code;
  }
}
