/* C interface to the transported-performance library.
 *
 * Every function reports failure through a tperf_status; the message of the
 * most recent failure on the calling thread is available from
 * tperf_last_error(). Strings returned by accessors are owned by the handle
 * they came from and stay valid until that handle is freed.
 */
#ifndef TPERF_H
#define TPERF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TPERF_API __declspec(dllexport)
#else
#define TPERF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tperf_status {
    TPERF_OK = 0,
    TPERF_ERR_INTERNAL = 1,         /* unexpected failure, a bug */
    TPERF_ERR_CONFIG = 2,           /* malformed or inconsistent configuration */
    TPERF_ERR_DATA = 3,             /* input data failed validation */
    TPERF_ERR_ESTIMATION = 4,       /* fitting or estimation failed */
    TPERF_ERR_INVALID_ARGUMENT = 5  /* NULL handle or unknown command */
} tperf_status;

typedef struct tperf_result tperf_result;
typedef struct tperf_dataset tperf_dataset;

/* Values that take precedence over the config. NULL strings, has_seed == 0
 * and threads == 0 leave the config value in place. */
typedef struct tperf_options {
    const char* data_path;
    const char* out_dir;
    int has_seed;
    uint64_t seed;
    unsigned threads;
} tperf_options;

TPERF_API const char* tperf_version(void);

/* Message and error name ("ConfigError", "Separation", ...) of the last
 * failure on this thread; empty strings after a success. */
TPERF_API const char* tperf_last_error(void);
TPERF_API const char* tperf_last_error_name(void);

/* Runs "evaluate", "simulate", "tilt-scan" or "calibrate" with a JSON config
 * text. On success *out receives a result handle. Nothing is written to disk. */
TPERF_API tperf_status tperf_run(const char* command, const char* config_json,
                                 const tperf_options* options, tperf_result** out);

TPERF_API const char* tperf_result_json(const tperf_result* result);
TPERF_API const char* tperf_result_csv(const tperf_result* result);
TPERF_API const char* tperf_result_provenance(const tperf_result* result);
/* Output directory from the config after overrides. */
TPERF_API const char* tperf_result_out_dir(const tperf_result* result);
TPERF_API const char* tperf_result_config_hash(const tperf_result* result);

/* Writes results.json, results.csv and provenance.json; dir NULL means the
 * configured output directory. */
TPERF_API tperf_status tperf_result_write(const tperf_result* result, const char* dir);
TPERF_API void tperf_result_free(tperf_result* result);

/* Loads and validates a CSV dataset. */
TPERF_API tperf_status tperf_dataset_load(const char* path, tperf_dataset** out);
TPERF_API size_t tperf_dataset_rows(const tperf_dataset* data);
TPERF_API size_t tperf_dataset_target_rows(const tperf_dataset* data);
TPERF_API int tperf_dataset_studies(const tperf_dataset* data);
TPERF_API void tperf_dataset_free(tperf_dataset* data);

#ifdef __cplusplus
}
#endif

#endif /* TPERF_H */
