#ifndef IWATSUKA_H
#define IWATSUKA_H

#include <stddef.h>
#include <stdint.h>

#if defined(IWATSUKA_BUILDING_LIBRARY)
#define IW_API __attribute__((visibility("default")))
#else
#define IW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The numeric values double as CLI exit codes. */
typedef enum iw_status {
  IW_OK = 0,
  IW_INVALID_ARGUMENT = 1,
  IW_NUMERICAL_ERROR = 2,
  IW_SELFTEST_FAILED = 3,
  IW_INTERNAL_ERROR = 4
} iw_status;

typedef struct iw_field iw_field;
typedef struct iw_band_table iw_band_table;

IW_API const char* iw_version(void);

/* Message of the last failing call on this thread ("" after success). */
IW_API const char* iw_last_error(void);

/* Summary text of the last iw_run_config* or iw_selftest call on this thread. */
IW_API const char* iw_last_output(void);

/* Worker threads for fiber sweeps; 0 selects the hardware concurrency. */
IW_API void iw_set_threads(unsigned threads);

/* Fields. Free with iw_field_free. */
IW_API iw_status iw_field_constant(double b, iw_field** out);
IW_API iw_status iw_field_tanh(double b_minus, double b_plus, double scale, iw_field** out);
IW_API iw_status iw_field_smoothed_step(double b_minus, double b_plus, double center, double width, iw_field** out);
/* Field from its JSON description (the "field" object of a run config). */
IW_API iw_status iw_field_from_json(const char* json, iw_field** out);
/* Adds a hat-basis perturbation w to the vector potential. */
IW_API iw_status iw_field_perturb(const iw_field* field, double support_radius, const double* coefficients,
                                  size_t count, iw_field** out);
IW_API void iw_field_free(iw_field* field);
IW_API iw_status iw_field_eval(const iw_field* field, double x, double* b, double* a);

/* Band functions lambda_1..lambda_j_max on count equispaced xi nodes. n is
   the number of interior grid points per fiber (0 selects 2000). */
IW_API iw_status iw_compute_bands(const iw_field* field, double xi_min, double xi_max, size_t count, size_t j_max,
                                  size_t n, iw_band_table** out);
IW_API void iw_band_table_free(iw_band_table* table);
IW_API size_t iw_band_table_size(const iw_band_table* table);
IW_API size_t iw_band_table_j_max(const iw_band_table* table);
IW_API iw_status iw_band_table_xi(const iw_band_table* table, size_t i, double* xi);
/* j is 1-based. */
IW_API iw_status iw_band_table_lambda(const iw_band_table* table, size_t i, size_t j, double* lambda);
/* <v phi_1, phi_1> at node i. */
IW_API iw_status iw_band_table_vmoment(const iw_band_table* table, size_t i, double* value);

/* Current of a smooth bump of half-width `width` at `center` (unit
   amplitude) by route "fiber_quadrature", "band_derivative", "by_parts" or
   "evolution". */
IW_API iw_status iw_theta(const iw_band_table* table, double center, double width, const char* route, double* theta);

/* Runs a JSON config. Relative input paths resolve against base_dir, outputs
   go to out_dir (NULL means "."). seed overrides the config seed when not
   NULL. Returns IW_SELFTEST_FAILED when a selftest reports failures. */
IW_API iw_status iw_run_config(const char* config_json, const char* base_dir, const char* out_dir,
                               const uint64_t* seed);
/* As iw_run_config, with base_dir set to the directory of the file. */
IW_API iw_status iw_run_config_file(const char* path, const char* out_dir, const uint64_t* seed);

IW_API iw_status iw_selftest(size_t* passed, size_t* failed);

#ifdef __cplusplus
}
#endif

#endif
