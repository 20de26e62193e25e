/*
 * uavsim C API: multi-UAV aerial base-station simulator and trainer.
 *
 * Everything goes through an opaque uvs_config handle and status codes.
 * Status codes double as process exit codes: 0 success, 1 internal error,
 * 2 configuration/usage error, 3 checkpoint mismatch. After any non-OK
 * status, uvs_last_error() returns a human-readable detail string (thread
 * local, valid until the next API call on that thread).
 */
#ifndef UAVSIM_H
#define UAVSIM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uvs_status {
  UVS_OK = 0,
  UVS_ERR_INTERNAL = 1,
  UVS_ERR_CONFIG = 2,
  UVS_ERR_CHECKPOINT = 3
} uvs_status;

typedef struct uvs_config uvs_config;

/* Library semantic version, e.g. "1.0.0". */
const char* uvs_version(void);

/* Static name of a status code ("ok", "internal", "config", "checkpoint"). */
const char* uvs_status_name(uvs_status status);

/* Detail message for the most recent failure on this thread ("" if none). */
const char* uvs_last_error(void);

/*
 * Creates a configuration. preset may be NULL or "" (full-scale defaults),
 * "paper" (same), or "desk" (small world, short schedule). The handle must
 * be released with uvs_config_free.
 */
uvs_status uvs_config_create(const char* preset, uvs_config** out);

/* Overlays an INI scenario file ([world]/[radio]/[energy]/[train]/[run]). */
uvs_status uvs_config_load(uvs_config* cfg, const char* path);

/* Sets one key, e.g. uvs_config_set(cfg, "world.n_ues", "8"). */
uvs_status uvs_config_set(uvs_config* cfg, const char* key, const char* value);

/* Reads one key into buf (NUL-terminated, truncated to buflen). */
uvs_status uvs_config_get(const uvs_config* cfg, const char* key, char* buf,
                          size_t buflen);

void uvs_config_free(uvs_config* cfg);

/*
 * Trains per the configuration into out_dir (falls back to the configured
 * run.output_dir when out_dir is NULL). Writes manifest.json,
 * config_used.ini, metrics.jsonl and periodic checkpoint.uvsck. A run
 * directory with a matching manifest resumes. The UAVSIM_SEED environment
 * variable overrides the configured seed.
 */
uvs_status uvs_train(const uvs_config* cfg, const char* out_dir);

/*
 * Greedy evaluation of a trained checkpoint; per-step metrics land in
 * out_dir. checkpoint may be NULL only for the Random method.
 */
uvs_status uvs_eval(const uvs_config* cfg, const char* checkpoint,
                    const char* out_dir);

/*
 * Trains and evaluates each (method, seed) pair, e.g. methods_csv
 * "Proposed,Random", seeds_csv "1,2,3"; writes summary.json in out_dir.
 */
uvs_status uvs_compare(const uvs_config* cfg, const char* methods_csv,
                       const char* seeds_csv, const char* out_dir);

/*
 * Tabulates figure data from a run directory into a TSV file. Keys:
 * reward_curve, support_rate, qos, overlap, energy, trajectory.
 */
uvs_status uvs_export(const char* run_dir, const char* figure_key,
                      const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* UAVSIM_H */
