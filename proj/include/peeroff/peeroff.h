/* peeroff: peer offloading simulator, C interface.
 *
 * Every function returns a peeroff_status. On failure the message (and, for configuration
 * errors, the offending key path) is available from peeroff_last_error* on the same thread
 * until the next call. Strings returned through char** are owned by the caller and released
 * with peeroff_string_free. */
#ifndef PEEROFF_H
#define PEEROFF_H

#include <stdint.h>

#if defined(_WIN32)
#  if defined(PEEROFF_BUILDING)
#    define PEEROFF_API __declspec(dllexport)
#  else
#    define PEEROFF_API __declspec(dllimport)
#  endif
#else
#  define PEEROFF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum peeroff_status {
    PEEROFF_OK = 0,
    PEEROFF_INVALID_ARGUMENT = 1,
    PEEROFF_CONFIG = 2,
    PEEROFF_DOMAIN = 3,
    PEEROFF_CONTRACT = 4,
    PEEROFF_INFEASIBLE = 5,
    PEEROFF_INVARIANT = 6,
    PEEROFF_IO = 7,
    PEEROFF_INTERNAL = 8
} peeroff_status;

typedef struct peeroff_scenario peeroff_scenario;
typedef struct peeroff_run peeroff_run;

typedef struct peeroff_counts {
    long long arrived;
    long long served;
    long long blocked;
    long long dropped;
    long long ontime;
    long long late;
} peeroff_counts;

PEEROFF_API const char* peeroff_version(void);
PEEROFF_API const char* peeroff_status_name(peeroff_status status);
PEEROFF_API const char* peeroff_last_error(void);
/* Key path of the last configuration error, "" otherwise. */
PEEROFF_API const char* peeroff_last_error_key(void);
PEEROFF_API void peeroff_string_free(char* s);

/* Scenarios */
PEEROFF_API peeroff_status peeroff_scenario_load(const char* path, peeroff_scenario** out);
PEEROFF_API peeroff_status peeroff_scenario_parse(const char* json_text, peeroff_scenario** out);
/* key: top-level or dotted key; json_value: a JSON literal, or a bare word taken as a string. */
PEEROFF_API peeroff_status peeroff_scenario_override(peeroff_scenario* sc, const char* key, const char* json_value);
PEEROFF_API peeroff_status peeroff_scenario_to_json(const peeroff_scenario* sc, char** out);
PEEROFF_API peeroff_status peeroff_scenario_bounds_json(const peeroff_scenario* sc, char** out);
/* Solves the known-rate planning problem with the scenario's rates (explicit or derived). */
PEEROFF_API peeroff_status peeroff_scenario_solve_pk_json(const peeroff_scenario* sc, char** out);
/* Runs the invariant suite; *ok is 1 when every check passed. */
PEEROFF_API peeroff_status peeroff_scenario_validate(const peeroff_scenario* sc, int* ok, char** report_json);
PEEROFF_API void peeroff_scenario_free(peeroff_scenario* sc);

/* Runs; out_dir may be NULL to skip writing files. */
PEEROFF_API peeroff_status peeroff_run_simulate(const peeroff_scenario* sc, const char* out_dir, peeroff_run** out);
PEEROFF_API peeroff_status peeroff_run_summary_json(const peeroff_run* run, char** out);
PEEROFF_API peeroff_status peeroff_run_counts(const peeroff_run* run, peeroff_counts* out);
/* Numeric summary field by dotted path, e.g. "utility" or "counts.served" or "energy_per_bs.0". */
PEEROFF_API peeroff_status peeroff_run_metric(const peeroff_run* run, const char* path, double* out);
PEEROFF_API void peeroff_run_free(peeroff_run* run);

/* Sweeps: axes_json is [{"param": "v", "values": [5, 10]}, ...]. threads <= 0 picks the default.
 * Points that fail are marked in the manifest and counted in *n_failed; they do not fail the call.
 * n_ok, n_failed and manifest_json may be NULL. */
PEEROFF_API peeroff_status peeroff_sweep(const peeroff_scenario* sc, const char* axes_json, const char* out_dir,
                                         int threads, int* n_ok, int* n_failed, char** manifest_json);

/* Synthetic location CSV. */
PEEROFF_API peeroff_status peeroff_dataset_generate(uint64_t seed, int n_stations, int n_groups, const char* path);

/* Stand-alone planner: stations_json is a JSON array of station objects as in scenarios. */
PEEROFF_API peeroff_status peeroff_solve_pk_json(const char* stations_json, const double* lambda, int n, char** out);

#ifdef __cplusplus
}
#endif

#endif /* PEEROFF_H */
