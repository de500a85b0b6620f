#ifndef RTST_H
#define RTST_H

/* C interface to the flow-table lookup engine and pipeline simulator.
 *
 * Objects are opaque handles released with their *_free function. Every call
 * that can fail returns an rtst_status; on failure the thread's last error
 * (rtst_last_error_json) describes it. Strings returned through char** are
 * heap copies owned by the caller and released with rtst_string_free.
 * Flow tables, packet traces, update traces and per-item results use the
 * line-JSON formats in docs/formats.md. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RTST_API __declspec(dllexport)
#else
#define RTST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rtst_status {
  RTST_OK = 0,
  RTST_E_INVALID_ARGUMENT = 1,
  RTST_E_PARSE = 2,
  RTST_E_IO = 3,
  RTST_E_NOT_FOUND = 4,
  RTST_E_DUPLICATE = 5,
  RTST_E_CONFLICT = 6,
  RTST_E_INFEASIBLE = 7,
  RTST_E_CAPACITY = 8,
  RTST_E_INTERNAL = 9
} rtst_status;

typedef struct rtst_table rtst_table;
typedef struct rtst_engine rtst_engine;
typedef struct rtst_sim rtst_sim;

RTST_API const char* rtst_status_name(rtst_status s);
/* {"error": name, "message": text, "flow_id"?: id} for the last failure on
 * this thread; "{}" if none. Valid until the next failing call. */
RTST_API const char* rtst_last_error_json(void);
RTST_API void rtst_string_free(char* s);

/* Generation. config_json keys (all optional): schema, n_flows, seed,
 * min_prefix, max_prefix, max_priority, disjoint_sa, sa_reuse, n_packets,
 * hit_fraction, n_updates, missing_fraction. Any output pointer may be NULL. */
RTST_API rtst_status rtst_generate(const char* config_json, char** flows_jsonl, char** packets_jsonl,
                                   char** updates_jsonl);

/* schema: "openflow", "five_tuple" or a path to a schema JSON file. */
RTST_API rtst_status rtst_table_parse(const char* schema, const char* flows_jsonl, rtst_table** out);
RTST_API size_t rtst_table_size(const rtst_table* t);
RTST_API void rtst_table_free(rtst_table* t);

/* target_k < 0 asks for greedy first-fit. */
RTST_API rtst_status rtst_plan(const rtst_table* t, int64_t target_k, char** plan_json);

/* plan_json NULL: partition with target_k (negative for first-fit). */
RTST_API rtst_status rtst_engine_build(const rtst_table* t, const char* plan_json, int64_t target_k,
                                       rtst_engine** out);
RTST_API void rtst_engine_free(rtst_engine* e);
/* k, heights, flow count and memory figures. */
RTST_API rtst_status rtst_engine_info(const rtst_engine* e, char** info_json);
/* Every tree, level by level. */
RTST_API rtst_status rtst_engine_dump(const rtst_engine* e, char** dump_json);
RTST_API rtst_status rtst_engine_classify(const rtst_engine* e, const char* packets_jsonl, int with_traces,
                                          char** results_jsonl);
/* Applies an update trace in order and mirrors it on the brute-force oracle.
 * Refused ops are reported in outcomes, not as a failing status. check_jsonl
 * (may be NULL) holds packets classified by both afterwards; summary_json
 * counts disagreements. */
RTST_API rtst_status rtst_engine_replay(rtst_engine* e, const char* updates_jsonl, const char* check_jsonl,
                                        char** outcomes_jsonl, char** summary_json);

/* config_json keys (optional): lanes, clock_mhz, spare_sst_stages,
 * spare_dst_stages. The simulator keeps a reference to e, which must outlive
 * it; updates run through the simulator are applied to e. */
RTST_API rtst_status rtst_sim_create(rtst_engine* e, const char* config_json, rtst_sim** out);
RTST_API void rtst_sim_free(rtst_sim* s);
RTST_API rtst_status rtst_sim_run(rtst_sim* s, const char* packets_jsonl, const char* updates_jsonl,
                                  char** outcomes_jsonl, char** report_json);

/* options_json keys (optional): k, lanes, clock_mhz, verify. */
RTST_API rtst_status rtst_bench(const rtst_table* t, const char* packets_jsonl, const char* options_json,
                                char** report_json);
/* Generation keys as rtst_generate plus "ns" and "ks" arrays and the bench
 * options. */
RTST_API rtst_status rtst_sweep(const char* options_json, char** csv, char** reports_json);

#ifdef __cplusplus
}
#endif

#endif
