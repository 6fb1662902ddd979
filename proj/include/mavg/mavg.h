/* C interface to the model-averaging library. Every function returns a
 * mavg_status; on failure the message is available from mavg_last_error()
 * on the same thread until the next call that fails. Handles are opaque and
 * must be released with the matching *_free function. Matrices are passed
 * row-major, n rows by p columns. */
#ifndef MAVG_MAVG_H
#define MAVG_MAVG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MAVG_API __declspec(dllexport)
#else
#define MAVG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mavg_status {
  MAVG_OK = 0,
  MAVG_INVALID_ARGUMENT = 1,
  MAVG_DIMENSION_MISMATCH = 2,
  MAVG_NUMERICAL = 3,
  MAVG_CONVERGENCE = 4,
  MAVG_IO = 5,
  MAVG_REFUSED = 6,
  MAVG_INTERNAL = 99
} mavg_status;

typedef struct mavg_dataset mavg_dataset;
typedef struct mavg_fit mavg_fit;
typedef struct mavg_panel mavg_panel;
typedef struct mavg_config mavg_config;

MAVG_API const char* mavg_version(void);
MAVG_API const char* mavg_last_error(void);
MAVG_API const char* mavg_status_name(mavg_status status);

/* Datasets. `names` may be NULL for X1..Xp. */
MAVG_API mavg_status mavg_dataset_create(const double* y, const double* x, size_t n, size_t p,
                                         const char* const* names, mavg_dataset** out);
MAVG_API mavg_status mavg_dataset_read_csv(const char* path, const char* response, mavg_dataset** out);
MAVG_API mavg_status mavg_dataset_generate(const char* study, size_t n, uint64_t seed, mavg_dataset** out);
MAVG_API mavg_status mavg_dataset_write_csv(const mavg_dataset* data, const char* path);
MAVG_API mavg_status mavg_dataset_dims(const mavg_dataset* data, size_t* n, size_t* p);
MAVG_API void mavg_dataset_free(mavg_dataset* data);

/* Fits. method: ols, ms, fma, bma, mma, jma, lae, or a learner list such as
 * "sl", "sl+" or "OLS,MEAN,MMA+squares". `seed` drives any cross-validation. */
MAVG_API mavg_status mavg_fit_create(const mavg_dataset* data, const char* method, uint64_t seed, mavg_fit** out);
/* Copies up to `capacity` values and stores the full count in *count. */
MAVG_API mavg_status mavg_fit_coefficients(const mavg_fit* fit, double* out, size_t capacity, size_t* count);
MAVG_API mavg_status mavg_fit_std_errors(const mavg_fit* fit, double* out, size_t capacity, size_t* count);
MAVG_API mavg_status mavg_fit_weights(const mavg_fit* fit, double* out, size_t capacity, size_t* count);
MAVG_API mavg_status mavg_fit_predict(const mavg_fit* fit, const double* x, size_t n, size_t p, double* out);
MAVG_API mavg_status mavg_fit_write_csv(const mavg_fit* fit, const char* path);
/* Same text as mavg_fit_write_csv; *length excludes the terminating NUL. */
MAVG_API mavg_status mavg_fit_to_csv(const mavg_fit* fit, char* out, size_t capacity, size_t* length);
MAVG_API void mavg_fit_free(mavg_fit* fit);

/* Longitudinal panels and the sequential g-formula. rule: "always" or "threshold". */
MAVG_API mavg_status mavg_panel_generate(size_t n, size_t horizon, uint64_t seed, mavg_panel** out);
MAVG_API mavg_status mavg_panel_read_csv(const char* path, mavg_panel** out);
MAVG_API mavg_status mavg_panel_write_csv(const mavg_panel* panel, const char* path);
MAVG_API mavg_status mavg_panel_dims(const mavg_panel* panel, size_t* n, size_t* horizon);
MAVG_API void mavg_panel_free(mavg_panel* panel);
MAVG_API mavg_status mavg_gformula(const mavg_panel* panel, const char* rule, int persistence, const char* learners,
                                   size_t folds, uint64_t seed, double* psi_hat);
MAVG_API mavg_status mavg_truth(const char* rule, int persistence, size_t n, uint64_t seed, size_t horizon,
                                double* mean, double* mc_se);

/* Simulation studies, configured by key = value settings (study, runs, n, seed,
 * workers, out, folds, horizon, truth_n, persistence, resume, learner_sets, full_scale). */
MAVG_API mavg_status mavg_config_create(const char* study, int full_scale, mavg_config** out);
MAVG_API mavg_status mavg_config_set(mavg_config* cfg, const char* key, const char* value);
MAVG_API mavg_status mavg_config_describe(const mavg_config* cfg, char* out, size_t capacity, size_t* length);
MAVG_API void mavg_config_free(mavg_config* cfg);
typedef void (*mavg_progress_fn)(size_t done, size_t total, void* user);
/* Runs or resumes the study; writes records, tables and meta.txt to the configured directory. */
MAVG_API mavg_status mavg_run_study(const mavg_config* cfg, mavg_progress_fn progress, void* user);

#ifdef __cplusplus
}
#endif

#endif
