/* C interface to the multi-agent Hawkes process library. */
#ifndef MAHP_MAHP_H
#define MAHP_MAHP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MAHP_API __declspec(dllexport)
#elif defined(__GNUC__)
#define MAHP_API __attribute__((visibility("default")))
#else
#define MAHP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mahp_status {
  MAHP_OK = 0,
  MAHP_ERR_INVALID_ARGUMENT = 1,
  MAHP_ERR_DIMENSION = 2,
  MAHP_ERR_INDEX = 3,
  MAHP_ERR_PARSE = 4,
  MAHP_ERR_VERSION = 5,
  MAHP_ERR_NONSTATIONARY = 6,
  MAHP_ERR_IO = 7,
  MAHP_ERR_RUNTIME = 8
} mahp_status;

typedef struct mahp_dataset mahp_dataset;
typedef struct mahp_model mahp_model;
typedef struct mahp_report mahp_report;
typedef struct mahp_plan mahp_plan;

MAHP_API const char* mahp_version(void);
/* Message of the last failure on this thread; empty after success. */
MAHP_API const char* mahp_last_error(void);
MAHP_API const char* mahp_status_name(mahp_status status);
/* 1 for bad input (validation, parse, dimension, ...), 0 for OK, io or runtime failures. */
MAHP_API int mahp_status_is_input_error(mahp_status status);

/* Event datasets (JSONL). */
MAHP_API mahp_status mahp_dataset_read(const char* path, mahp_dataset** out);
MAHP_API mahp_status mahp_dataset_write(const mahp_dataset* data, const char* path);
MAHP_API mahp_status mahp_dataset_info(const mahp_dataset* data, size_t* num_entities, size_t* num_agents,
                                       double* horizon, size_t* num_events);
MAHP_API void mahp_dataset_free(mahp_dataset* data);

/* Models and checkpoints (JSON). */
MAHP_API mahp_status mahp_model_read(const char* path, mahp_model** out);
/* timestamp may be NULL; it is then written as null. */
MAHP_API mahp_status mahp_model_write(const mahp_model* model, const char* path, const char* timestamp);
MAHP_API mahp_status mahp_model_info(const mahp_model* model, size_t* num_entities, size_t* num_agents,
                                     size_t* num_kernels);
/* theta = [U; A]; the pointer stays valid until the model is freed. */
MAHP_API mahp_status mahp_model_theta(const mahp_model* model, const double** theta, size_t* length);
MAHP_API void mahp_model_free(mahp_model* model);

/* Simulation. config_json may be NULL for defaults; seed overrides the config seed when non-NULL.
   truth may be NULL. */
MAHP_API mahp_status mahp_simulate(const char* config_json, const uint64_t* seed, mahp_dataset** data,
                                   mahp_model** truth);

/* Fitting. config_json uses the flat fit-config keys and may be NULL. init and truth may be NULL;
   without init the model starts from count-based U and small random A. */
MAHP_API mahp_status mahp_fit(const mahp_dataset* data, const char* config_json, const mahp_model* init,
                              const mahp_model* truth, mahp_model** out, mahp_report** report);
MAHP_API mahp_status mahp_report_write_csv(const mahp_report* report, const char* path, int timing);
MAHP_API size_t mahp_report_epochs(const mahp_report* report);
/* Final-epoch values; errors are NaN when no truth was supplied. */
MAHP_API mahp_status mahp_report_final(const mahp_report* report, double* nll, double* err_exogenous,
                                       double* err_impact);
MAHP_API size_t mahp_report_warning_count(const mahp_report* report);
MAHP_API const char* mahp_report_warning(const mahp_report* report, size_t index);
MAHP_API void mahp_report_free(mahp_report* report);

/* Diversity-driven superposition into num_folders merged sequences. */
MAHP_API mahp_status mahp_superpose(const mahp_dataset* data, size_t num_folders, uint64_t seed,
                                    mahp_dataset** merged, mahp_plan** plan);
MAHP_API mahp_status mahp_plan_write(const mahp_plan* plan, const char* path);
MAHP_API void mahp_plan_free(mahp_plan* plan);

typedef struct mahp_bound_inputs {
  double u0;  /* bound on ||U||_F^2 */
  double a0;  /* bound on ||A||_F^2 */
  double u0p; /* bound on ||U'||_F^2 */
  size_t num_agents;
  size_t num_folders;
  size_t num_entities;
  size_t num_kernels;
  double total_events;
  double delta;
} mahp_bound_inputs;

typedef struct mahp_bound_result {
  int holds;
  double lhs;
  double rhs;
} mahp_bound_result;

MAHP_API mahp_status mahp_check_bound(const mahp_bound_inputs* inputs, mahp_bound_result* result);

/* Top-N recommendations for every agent of history at time `at` (NaN means the data horizon),
   written as CSV agent,rank,entity,score. */
MAHP_API mahp_status mahp_recommend(const mahp_model* model, const mahp_dataset* history, double at, size_t top,
                                    const char* out_csv);

typedef struct mahp_topn {
  size_t top;
  size_t users;
  size_t excluded;
  double precision;
  double recall;
  double f1;
} mahp_topn;

/* Scores a recommendation CSV against a truth CSV (agent,entity). */
MAHP_API mahp_status mahp_evaluate(const char* results_csv, const char* truth_csv, size_t top, mahp_topn* out);

/* Runs a sweep spec (JSON text) and writes the tidy CSV. */
MAHP_API mahp_status mahp_sweep(const char* spec_json, const char* out_csv, int timing);

/* Cold-start split of a raw CSV. options_json keys: train_begin, split, test_end (epoch seconds),
   max_train_events, min_rating, min_test_events, min_item_support, time_unit. Writes the train
   events (JSONL), the test truth (CSV agent,entity) and, when map_out is non-NULL, the id maps (JSON). */
MAHP_API mahp_status mahp_coldstart_split(const char* raw_csv, const char* options_json, const char* train_out,
                                          const char* truth_out, const char* map_out);

#ifdef __cplusplus
}
#endif

#endif
