/* C interface to the subspace-optimization core. All functions return an
 * rso_status; rso_last_error() holds the message for the most recent failure
 * on the calling thread. Objects returned through out-parameters are owned
 * by the caller and released with the matching _free function. */
#ifndef RSO_C_H
#define RSO_C_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rso_status {
  RSO_OK = 0,
  RSO_ERR_CHECK_FAILED = 1, /* a verification check ran and did not pass */
  RSO_ERR_CONFIG = 2,       /* bad usage, arguments, or configuration */
  RSO_ERR_NUMERIC = 3,      /* numeric abort; partial outputs were written */
  RSO_ERR_IO = 4
} rso_status;

typedef struct rso_config rso_config; /* parsed experiment configuration */
typedef struct rso_result rso_result; /* outcome of a train/sweep run */

const char* rso_version(void);
const char* rso_last_error(void);

rso_status rso_config_load(const char* path, rso_config** out);
rso_status rso_config_parse(const char* text, rso_config** out);
void rso_config_free(rso_config* cfg);

/* Runs training per the config (one run per seed), writing trace CSVs and a
 * summary JSON under out_dir. Returns RSO_ERR_NUMERIC if any run aborted on
 * non-finite values; partial traces are still written. */
rso_status rso_train_run(const rso_config* cfg, const char* out_dir, rso_result** out);

/* Cross-product sweep over list-valued config entries (rank, lr, seeds).
 * jobs limits cell concurrency; results are aggregated deterministically. */
rso_status rso_sweep_run(const rso_config* cfg, const char* out_dir, int jobs, rso_result** out);

const char* rso_result_summary_json(const rso_result* res);
void rso_result_free(rso_result* res);

/* Named verification check ("projections", "gradcheck", "sandwich", "bound")
 * with JSON options. *verdict_json receives the verdict (free with
 * rso_string_free); RSO_ERR_CHECK_FAILED means it ran but did not pass. */
rso_status rso_verify(const char* check, const char* options_json, char** verdict_json);

/* Analytic optimizer-state / activation / communication report for a named
 * architecture ("60M", "130M", "350M", "1B", "7B"). */
rso_status rso_memory_report(const char* arch, const char* alg, int rank, int element_bytes,
                             int seq_len, int batch, char** report_json);

void rso_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* RSO_C_H */
