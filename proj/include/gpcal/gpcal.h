/*
 * gpcal C API.
 *
 * All objects are opaque handles created by *_load / *_parse / *_train /
 * gpcal_simulate / gpcal_evaluate and released with the matching *_free.
 * Every fallible call returns a gpcal_status; on failure a description of
 * the most recent error on the calling thread is available from
 * gpcal_last_error(). Output handles are only written on success.
 */
#ifndef GPCAL_GPCAL_H_
#define GPCAL_GPCAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(GPCAL_BUILDING_LIBRARY)
#define GPCAL_API __attribute__((visibility("default")))
#else
#define GPCAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpcal_status {
    GPCAL_OK = 0,
    GPCAL_ERROR_IO = 1,          /* file could not be read or written */
    GPCAL_ERROR_VALIDATION = 2,  /* bad input, config or dimensions */
    GPCAL_ERROR_NUMERICAL = 3,   /* singular kernel matrix, rank-deficient design */
    GPCAL_ERROR_INTERNAL = 4
} gpcal_status;

typedef struct gpcal_config gpcal_config;
typedef struct gpcal_simulation gpcal_simulation;
typedef struct gpcal_dataset gpcal_dataset;
typedef struct gpcal_model gpcal_model;
typedef struct gpcal_trajectory gpcal_trajectory;
typedef struct gpcal_evaluation gpcal_evaluation;

typedef struct gpcal_metrics {
    size_t poses;
    double ate_m;
    double rpe_m;              /* reported in millimetres by the writers */
    double ate_rot_rad;
    double rpe_rot_rad;
} gpcal_metrics;

GPCAL_API const char* gpcal_version(void);
GPCAL_API const char* gpcal_last_error(void);

/* Configuration */
GPCAL_API gpcal_status gpcal_config_load(const char* path, gpcal_config** out);
GPCAL_API gpcal_status gpcal_config_parse(const char* text, gpcal_config** out);
GPCAL_API gpcal_status gpcal_config_set_seed(gpcal_config* config, uint64_t seed);
/* The returned string lives as long as the config. */
GPCAL_API gpcal_status gpcal_config_output_dir(const gpcal_config* config, const char** out);
GPCAL_API void gpcal_config_free(gpcal_config* config);

/* Simulation */
GPCAL_API gpcal_status gpcal_simulate(const gpcal_config* config, gpcal_simulation** out);
GPCAL_API gpcal_status gpcal_simulation_counts(const gpcal_simulation* sim, size_t* truth_rows,
                                               size_t* odometry_rows, size_t* dataset_rows);
/* Any path may be NULL to skip that file. */
GPCAL_API gpcal_status gpcal_simulation_write(const gpcal_simulation* sim, const char* truth_path,
                                              const char* odometry_path, const char* dataset_path);
GPCAL_API gpcal_status gpcal_simulation_dataset(const gpcal_simulation* sim, gpcal_dataset** out);
GPCAL_API gpcal_status gpcal_simulation_truth(const gpcal_simulation* sim, gpcal_trajectory** out);
GPCAL_API void gpcal_simulation_free(gpcal_simulation* sim);

/* Datasets */
GPCAL_API gpcal_status gpcal_dataset_load(const char* path, gpcal_dataset** out);
GPCAL_API gpcal_status gpcal_dataset_save(const gpcal_dataset* dataset, const char* path);
GPCAL_API gpcal_status gpcal_dataset_size(const gpcal_dataset* dataset, size_t* rows, size_t* tick_dim);
GPCAL_API void gpcal_dataset_free(gpcal_dataset* dataset);

/* Models */
GPCAL_API gpcal_status gpcal_model_train(const gpcal_config* config, const gpcal_dataset* training,
                                         gpcal_model** out);
GPCAL_API gpcal_status gpcal_model_save(const gpcal_model* model, const char* path);
GPCAL_API gpcal_status gpcal_model_load(const char* path, gpcal_model** out);
/* Kind tag such as "linear_huber" or "cgp_zero_lin"; static storage. */
GPCAL_API gpcal_status gpcal_model_kind(const gpcal_model* model, const char** out);
GPCAL_API gpcal_status gpcal_model_tick_dim(const gpcal_model* model, size_t* out);
/* Writes the NUL-terminated fit report into buf (if capacity allows) and
 * the required size including the terminator into *needed. */
GPCAL_API gpcal_status gpcal_model_report(const gpcal_model* model, const gpcal_dataset* training,
                                          char* buf, size_t capacity, size_t* needed);
/* mean: 3 values (x, y, theta); cov: 9 values row-major, may be NULL. */
GPCAL_API gpcal_status gpcal_model_predict(const gpcal_model* model, const double* ticks,
                                           size_t tick_dim, double* mean, double* cov);
GPCAL_API void gpcal_model_free(gpcal_model* model);

/* Trajectories */
GPCAL_API gpcal_status gpcal_trajectory_load(const char* path, gpcal_trajectory** out);
GPCAL_API gpcal_status gpcal_trajectory_size(const gpcal_trajectory* trajectory, size_t* out);
GPCAL_API void gpcal_trajectory_free(gpcal_trajectory* trajectory);

/* Evaluation. truth may be NULL: the predicted trajectory then starts at the
 * origin and no metrics are produced. */
GPCAL_API gpcal_status gpcal_evaluate(const gpcal_model* model, const gpcal_dataset* test,
                                      const gpcal_trajectory* truth, gpcal_evaluation** out);
/* Writes predicted_trajectory.csv and, when available,
 * reference_trajectory.csv, metrics.txt and metrics.csv into out_dir. */
GPCAL_API gpcal_status gpcal_evaluation_write(const gpcal_evaluation* eval, const char* out_dir);
GPCAL_API gpcal_status gpcal_evaluation_metrics(const gpcal_evaluation* eval, gpcal_metrics* out,
                                                int* has_metrics);
GPCAL_API void gpcal_evaluation_free(gpcal_evaluation* eval);

/* Metrics between two trajectories aligned by nearest timestamp. A
 * tolerance <= 0 selects half the median reference spacing. */
GPCAL_API gpcal_status gpcal_metrics_compute(const gpcal_trajectory* estimated,
                                             const gpcal_trajectory* reference, double tolerance,
                                             gpcal_metrics* out);
GPCAL_API gpcal_status gpcal_metrics_write(const gpcal_metrics* metrics, const char* text_path,
                                           const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif /* GPCAL_GPCAL_H_ */
