#ifndef HARVESTKIT_H
#define HARVESTKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HK_API __declspec(dllexport)
#else
#define HK_API __attribute__((visibility("default")))
#endif

typedef enum hk_status {
  HK_OK = 0,
  HK_ERR_INVALID_ARGUMENT = 1,
  HK_ERR_DOMAIN = 2,
  HK_ERR_CAPACITY = 3,
  HK_ERR_PRECONDITION = 4,
  HK_ERR_NUMERICAL = 5,
  HK_ERR_NOT_CONVERGED = 6,
  HK_ERR_IO = 7,
  HK_ERR_PARSE = 8,
  HK_ERR_INTERNAL = 9
} hk_status;

typedef enum hk_precision { HK_PRECISION_DOUBLE = 0, HK_PRECISION_EXTENDED = 1, HK_PRECISION_AUTO = 2 } hk_precision;

typedef enum hk_kind { HK_KIND_H = 0, HK_KIND_DELTA = 1, HK_KIND_W = 2, HK_KIND_G = 3 } hk_kind;

typedef enum hk_format { HK_FORMAT_JSON = 0, HK_FORMAT_BINARY = 1 } hk_format;

typedef struct hk_matrices hk_matrices;
typedef struct hk_profile hk_profile;

HK_API const char* hk_version(void);
/* message of the last failing call on this thread; never NULL */
HK_API const char* hk_last_error(void);
HK_API const char* hk_status_string(hk_status s);
/* effective worker count; requested <= 0 means hardware concurrency capped by HARVESTKIT_THREADS */
HK_API int hk_thread_count(int requested);
HK_API hk_status hk_precision_from_string(const char* name, hk_precision* out);

/* ---- basis ---- */
HK_API hk_status hk_hermite_function(int n, double t, double T, double* out);

/* ---- matrices; omega, ell dimensionless (Omega T, L / T), T in units of T0 ---- */
HK_API hk_status hk_matrices_build(int N, double omega, double ell, double T, hk_precision mode, hk_matrices** out);
HK_API void hk_matrices_free(hk_matrices* m);
HK_API int hk_matrices_order(const hk_matrices* m); /* N */
/* (N+1)^2 row-major real and imaginary parts */
HK_API hk_status hk_matrices_get(const hk_matrices* m, hk_kind kind, double* re, double* im);
HK_API hk_status hk_matrices_diagnostics(const hk_matrices* m, int* bits, int* required_bits, int* flagged);
HK_API hk_status hk_matrices_export(const hk_matrices* m, hk_kind kind, const char* path, hk_format format);
/* max over unit real c of |c^T Delta c| */
HK_API hk_status hk_matrices_max_signalling(const hk_matrices* m, double* out);

/* ---- harvesting ---- */
typedef struct hk_report {
  double negativity;
  double negativity_unclamped;
  double harvested_negativity;
  double harvested_unclamped;
  double ser;
  double abs_cGc;
  double cWc;
  double abs_cDc;
  double abs_cHc;
  double norm2;
} hk_report;

HK_API hk_status hk_report_compute(const hk_matrices* m, const double* c, size_t len, hk_report* out);

/* ---- schedule and diagnostics (lengths in T0) ---- */
HK_API hk_status hk_t_schedule(int N, double L, double delta_T, double* T_N);
HK_API hk_status hk_tail_integral(int N, double L, double* value, int* argmax);
HK_API hk_status hk_signalling_ratio(int N, double L, double* log10_ratio);

/* ---- optimization ---- */
typedef struct hk_opt_result {
  double value;
  double theta;
  double omega_T0;
  double T;
  double alpha;
  double constraint_residual;
  int converged;
  int flagged;
  hk_report report;
} hk_opt_result;

typedef struct hk_curve_point {
  double omega_T0;
  double value;
  double negativity;
  double ser;
  double theta;
} hk_curve_point;

/* c_out receives N+1 entries (unit norm) and may be NULL */
HK_API hk_status hk_optimize_spacelike(int N, double omega_T0, double L, double delta_T, hk_precision mode,
                                       double* c_out, hk_opt_result* out);
HK_API hk_status hk_optimize_spacelike_matrices(const hk_matrices* m, double* c_out, hk_opt_result* out);
HK_API hk_status hk_sweep_gap(int N, double L, const double* omegas_T0, size_t count, double delta_T,
                              hk_precision mode, int threads, hk_curve_point* out);
HK_API hk_status hk_optimize_constrained(int N, double T, double L, double omega_T0, uint64_t seed, int random_starts,
                                         hk_precision mode, double* c_out, hk_opt_result* out);
/* per-omega results (count entries), best result and its c (N+1), zero-signalling root (NaN if none) */
HK_API hk_status hk_constrained_scan(int N, double T, double L, const double* omegas_T0, size_t count, uint64_t seed,
                                     int random_starts, hk_precision mode, int threads, hk_opt_result* per_omega,
                                     hk_opt_result* best, double* best_c, double* zero_gap_T0);
HK_API hk_status hk_find_zero_signalling_gap(const double* c, int N, double T, double L, double lo, double hi,
                                             double tol, double* out);
/* c^T Delta(omega) c for fixed c */
HK_API hk_status hk_signalling_form(const double* c, int N, double T, double L, double omega_T0, double* re, double* im);

/* ---- expansion ---- */
typedef struct hk_expand_info {
  int nodes;
  double refinement_delta;
  int converged;
  int panels; /* 1 when the panel fallback was used */
} hk_expand_info;

HK_API hk_status hk_profile_from_expression(const char* text, double support_half_width, hk_profile** out);
HK_API hk_status hk_profile_from_samples(const double* t, const double* v, size_t count, hk_profile** out);
HK_API hk_status hk_profile_from_csv(const char* path, hk_profile** out);
HK_API void hk_profile_free(hk_profile* p);
HK_API hk_status hk_profile_eval(const hk_profile* p, double t, double* out);
/* c_out receives N+1 coefficients; info may be NULL */
HK_API hk_status hk_expand(const hk_profile* p, int N, double T, double* c_out, hk_expand_info* info);
HK_API hk_status hk_reconstruct(const double* c, int N, double T, const double* t, size_t count, double* out);
HK_API hk_status hk_residual(const hk_profile* p, const double* c, int N, double T, double* out);

#ifdef __cplusplus
}
#endif

#endif
