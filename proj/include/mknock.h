#ifndef MKNOCK_H
#define MKNOCK_H

/*
 * C interface to the knockoff selection library.
 *
 * Every call returns a status code. On failure the message for the calling
 * thread is available from mknock_last_error() until the next failing call.
 * Handles are opaque and must be released with their matching _free function.
 * Strings returned through char** are owned by the caller and released with
 * mknock_string_free().
 *
 * Options and configurations are passed as JSON documents; unknown fields are
 * configuration errors.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(MKNOCK_BUILDING_LIBRARY)
#define MKNOCK_API __attribute__((visibility("default")))
#else
#define MKNOCK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mknock_status {
    MKNOCK_OK = 0,
    MKNOCK_ERR_INTERNAL = 1,
    MKNOCK_ERR_CONFIG = 2,
    MKNOCK_ERR_DATA = 3,
    MKNOCK_ERR_SOLVER = 4
} mknock_status;

typedef enum mknock_format {
    MKNOCK_FORMAT_JSON = 0,
    MKNOCK_FORMAT_CSV = 1,
    MKNOCK_FORMAT_TEXT = 2
} mknock_format;

typedef struct mknock_summary mknock_summary;
typedef struct mknock_screen mknock_screen;
typedef struct mknock_matrix mknock_matrix;

MKNOCK_API const char* mknock_version(void);
MKNOCK_API const char* mknock_last_error(void);
MKNOCK_API void mknock_string_free(char* s);

/* Log verbosity: 0 = warnings and errors, 1 = info, 2 = debug. */
MKNOCK_API void mknock_set_verbosity(int level);

/* ---- simulation ---------------------------------------------------------- */

/* Runs the replicates described by `config_json` (a seed is required). */
MKNOCK_API mknock_status mknock_simulate(const char* config_json, mknock_summary** out);
MKNOCK_API void mknock_summary_free(mknock_summary* s);

/* JSON (config, per-method means/SEs, per-replicate records), CSV (one row per
 * statistic) or an aligned text table. */
MKNOCK_API mknock_status mknock_summary_render(const mknock_summary* s, mknock_format format, char** out);

MKNOCK_API size_t mknock_summary_method_count(const mknock_summary* s);
/* Mean FDP and power of method `index` with Monte Carlo standard errors. Power
 * is NaN when every replicate had an empty truth. */
MKNOCK_API mknock_status mknock_summary_method(const mknock_summary* s, size_t index, const char** statistic,
                                               double* mean_fdp, double* se_fdp, double* mean_power,
                                               double* se_power);
MKNOCK_API int mknock_summary_aborted(const mknock_summary* s);

/* ---- screening ----------------------------------------------------------- */

/* Screens a data CSV. `options_json` names the outcome column(s) and the
 * pipeline settings (see the README for fields). */
MKNOCK_API mknock_status mknock_screen_file(const char* data_csv, const char* options_json, mknock_screen** out);

/* Screens an in-memory single-outcome data set. `w` is n x p row-major with
 * NaN for missing cells; `sigma_eps` is p x p row-major or NULL; `names` may be
 * NULL. No preprocessing is applied. */
MKNOCK_API mknock_status mknock_screen_matrix(const double* w, const double* y, size_t n, size_t p,
                                              const double* sigma_eps, const char* const* names,
                                              const char* options_json, mknock_screen** out);
MKNOCK_API void mknock_screen_free(mknock_screen* s);

/* Full report as JSON, or the per-feature CSV of one statistic (NULL: first). */
MKNOCK_API mknock_status mknock_screen_json(const mknock_screen* s, char** out);
MKNOCK_API mknock_status mknock_screen_csv(const mknock_screen* s, const char* statistic, char** out);

/* Selected feature indices (0-based) of one statistic (NULL: first). `indices`
 * may be NULL to query the count only; otherwise it must hold `capacity` ints. */
MKNOCK_API mknock_status mknock_screen_selected(const mknock_screen* s, const char* statistic, int* indices,
                                                size_t capacity, size_t* count);

/* ---- error covariance ---------------------------------------------------- */

/* Options: features (array, default all non batch/pair columns), paired,
 * diagonal, log_transform, na, floor. */
MKNOCK_API mknock_status mknock_error_cov(const char* qc_csv, const char* options_json, mknock_matrix** out);

/* ---- imputation ---------------------------------------------------------- */

/* Imputes the feature columns of a data CSV. Options: outcome (used as a
 * predictor when include_outcome is set), na, seed, impute. The result holds
 * the completed copies stacked with a leading imputation column. */
MKNOCK_API mknock_status mknock_impute_file(const char* data_csv, const char* options_json, mknock_matrix** out);

MKNOCK_API void mknock_matrix_free(mknock_matrix* m);
MKNOCK_API size_t mknock_matrix_rows(const mknock_matrix* m);
MKNOCK_API size_t mknock_matrix_cols(const mknock_matrix* m);
/* Row-major values. */
MKNOCK_API const double* mknock_matrix_data(const mknock_matrix* m);
MKNOCK_API const char* mknock_matrix_column_name(const mknock_matrix* m, size_t col);
MKNOCK_API mknock_status mknock_matrix_csv(const mknock_matrix* m, char** out);
/* Warnings attached to the result (rank deficiency, repaired coordinates, ...). */
MKNOCK_API size_t mknock_matrix_warning_count(const mknock_matrix* m);
MKNOCK_API const char* mknock_matrix_warning(const mknock_matrix* m, size_t index);

#ifdef __cplusplus
}
#endif

#endif
