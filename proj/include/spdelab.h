/* SPDX-License-Identifier: Apache-2.0 */
#ifndef SPDELAB_H
#define SPDELAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SPDELAB_API __declspec(dllexport)
#else
#define SPDELAB_API __attribute__((visibility("default")))
#endif

/* status codes; every call returns one, details in spdelab_last_error() */
enum {
    SPDELAB_OK = 0,
    SPDELAB_E_CONFIG = 1,     /* bad model / config / schema */
    SPDELAB_E_ARGUMENT = 2,   /* null handle, wrong length, out-of-range value */
    SPDELAB_E_SIMULATION = 3, /* non-finite state while stepping */
    SPDELAB_E_ESTIMATOR = 4,  /* non-finite samples, unusable fit */
    SPDELAB_E_DIVERGENCE = 5, /* Picard map does not contract */
    SPDELAB_E_IO = 6,
    SPDELAB_E_INTERNAL = 7
};

typedef struct spdelab_config spdelab_config;
typedef struct spdelab_result spdelab_result;
typedef struct spdelab_model spdelab_model;
typedef struct spdelab_field spdelab_field;

typedef struct {
    double value;
    double std_error;
    long n_outer;
    long n_inner;
    uint64_t seed;
} spdelab_estimate;

enum { SPDELAB_CHECK_ABS = 0, SPDELAB_CHECK_AT_MOST = 1, SPDELAB_CHECK_AT_LEAST = 2, SPDELAB_CHECK_INFO = 3 };

/* strings point into the result handle and live as long as it does */
typedef struct {
    const char* experiment;
    const char* name;
    double value, std_error, target, tolerance;
    int check;
    int pass;
} spdelab_metric;

SPDELAB_API const char* spdelab_version(void);
/* message of the last failed call on this thread ("" if none) */
SPDELAB_API const char* spdelab_last_error(void);
SPDELAB_API const char* spdelab_status_name(int status);

/* 0 = hardware concurrency */
SPDELAB_API int spdelab_set_threads(int n);
/* cli_flag > SPDELAB_THREADS > config_value > hardware (reported as 0) */
SPDELAB_API int spdelab_resolve_threads(int cli_flag, int config_value, int* out);

/* text listing of fields, experiment kinds, suites and bundled configs */
SPDELAB_API const char* spdelab_catalog(void);

/* ---- configs ---- */
SPDELAB_API int spdelab_config_load(const char* path, spdelab_config** out);
SPDELAB_API int spdelab_config_parse(const char* yaml_text, spdelab_config** out);
SPDELAB_API int spdelab_config_bundled(const char* name, spdelab_config** out);
/* key "section.name", value a YAML scalar or flow list */
SPDELAB_API int spdelab_config_set(spdelab_config* cfg, const char* key, const char* value);
/* what: kind, name, dump, hash, input_hash, output_dir, formats, seed, or a
   resolved "section.key"; the string lives until the next call on cfg */
SPDELAB_API int spdelab_config_get(const spdelab_config* cfg, const char* what, const char** out);
SPDELAB_API int spdelab_config_threads(const spdelab_config* cfg, int* out);
SPDELAB_API void spdelab_config_free(spdelab_config* cfg);

/* ---- experiments ---- */
SPDELAB_API int spdelab_run(const spdelab_config* cfg, spdelab_result** out);
/* seed < 0 keeps the pinned seeds; threads 0 defers to env / config */
SPDELAB_API int spdelab_verify(const char* suite, int64_t seed, int threads, spdelab_result** out);
SPDELAB_API int spdelab_result_passed(const spdelab_result* r, int* out);
/* formats: comma list of csv,json,plotdata; NULL writes all three */
SPDELAB_API int spdelab_result_write(const spdelab_result* r, const char* dir, const char* formats);
/* what: "csv", "json", "table" (metric or criteria table), "failing" */
SPDELAB_API int spdelab_result_text(const spdelab_result* r, const char* what, const char** out);
SPDELAB_API int spdelab_result_metric_count(const spdelab_result* r, size_t* out);
SPDELAB_API int spdelab_result_metric(const spdelab_result* r, size_t i, spdelab_metric* out);
SPDELAB_API int spdelab_result_criterion_count(const spdelab_result* r, size_t* out);
SPDELAB_API int spdelab_result_criterion(const spdelab_result* r, size_t i, int* id, const char** title, int* passed);
SPDELAB_API void spdelab_result_free(spdelab_result* r);

/* ---- direct numerics; model, G and stepping come from a config ---- */
SPDELAB_API int spdelab_model_create(const spdelab_config* cfg, spdelab_model** out);
SPDELAB_API int spdelab_model_dim(const spdelab_model* m, int* out);
SPDELAB_API int spdelab_model_constants(const spdelab_model* m, double* zeta_R, double* M);
SPDELAB_API void spdelab_model_free(spdelab_model* m);

SPDELAB_API int spdelab_field_create(const spdelab_model* m, const char* spec, spdelab_field** out);
SPDELAB_API int spdelab_field_eval(const spdelab_field* f, const double* x, size_t n, double* out);
SPDELAB_API void spdelab_field_free(spdelab_field* f);

SPDELAB_API int spdelab_estimate_pt(const spdelab_model* m, const spdelab_field* f, double t, const double* x, size_t n,
                                    long n_paths, uint64_t seed, spdelab_estimate* out);
SPDELAB_API int spdelab_bel_d1(const spdelab_model* m, const spdelab_field* f, double t, const double* x,
                               const double* h, size_t n, long n_paths, uint64_t seed, spdelab_estimate* out);
SPDELAB_API int spdelab_bel_d2(const spdelab_model* m, const spdelab_field* f, double t, const double* x,
                               const double* h, const double* k, size_t n, long n_outer, long n_inner,
                               uint64_t seed, spdelab_estimate* out);
/* tail: analytic bound on the truncated part of the Laplace integral */
SPDELAB_API int spdelab_resolvent(const spdelab_model* m, const spdelab_field* f, double lambda, const double* x,
                                  size_t n, long n_paths, int n_nodes, uint64_t seed, spdelab_estimate* out,
                                  double* tail);
/* v(t,x) with constant source g_const */
SPDELAB_API int spdelab_evolve(const spdelab_model* m, const spdelab_field* f, double g_const, double t, const double* x,
                               size_t n, long n_paths, int n_nodes, uint64_t seed, spdelab_estimate* out);
SPDELAB_API int spdelab_ll_regularize(const spdelab_model* m, const spdelab_field* f, double eps, const double* x,
                                      size_t n, double* value, int* boundary_warning);
/* one recorded path (x, delta_1 along r_1 e_1, weights) as columnar CSV */
SPDELAB_API int spdelab_dump_path(const spdelab_model* m, const double* x, size_t n, double t_end, uint64_t seed,
                                  uint64_t path_index, const char* file);

#ifdef __cplusplus
}
#endif

#endif
