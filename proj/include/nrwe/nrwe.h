/* SPDX-License-Identifier: Apache-2.0 */

/*
 * C API for the regression-decomposition library.
 *
 * Conventions:
 *  - opaque handles (nrwe_dataset) own their memory; release with the
 *    matching _free function;
 *  - every function returns a status code; on failure the thread-local
 *    message from nrwe_last_error() describes the cause;
 *  - output strings (JSON or CSV) are heap-allocated; release with
 *    nrwe_string_free().
 */

#ifndef NRWE_H
#define NRWE_H

#include <stddef.h>

#ifndef NRWE_EXPORT
#define NRWE_EXPORT __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  NRWE_OK = 0,
  NRWE_ERR_INPUT = 1,   /* bad config, file, expression, or column set */
  NRWE_ERR_NUMERIC = 2, /* singular design, degeneracy, sparse cells, ... */
  NRWE_ERR_INTERNAL = 3
} nrwe_status;

typedef struct nrwe_dataset nrwe_dataset;

NRWE_EXPORT const char* nrwe_version(void);

/* Thread-local message for the most recent failing call. */
NRWE_EXPORT const char* nrwe_last_error(void);

NRWE_EXPORT void nrwe_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* Load a strict CSV (header row, comma separated, '.' decimal).
 * controls is a comma-separated list of column names; the constant column
 * is implicit. */
NRWE_EXPORT nrwe_status nrwe_dataset_from_csv(const char* path,
                                              const char* outcome,
                                              const char* treatment,
                                              const char* controls,
                                              nrwe_dataset** out);

/* Simulate n draws from a DGP given either a preset name
 * ("table1-row1" | "table1-row2" | "table1-row3") or a JSON spec
 * {"h":"exp(x)","g":"sin(t)^2 + x","sigma_nu":1.0,"sigma_eps":1.0,
 *  "x_dist":{"uniform":[0,5]},"seed":42}.
 * seed overrides the spec seed unless it is 0. */
NRWE_EXPORT nrwe_status nrwe_dataset_simulate(const char* dgp, long n,
                                              unsigned long long seed,
                                              nrwe_dataset** out);

NRWE_EXPORT void nrwe_dataset_free(nrwe_dataset* ds);
NRWE_EXPORT long nrwe_dataset_rows(const nrwe_dataset* ds);
NRWE_EXPORT nrwe_status nrwe_dataset_to_csv(const nrwe_dataset* ds, char** out);

/* ---- analysis ---------------------------------------------------------- */

/* options JSON (all fields optional):
 *  {"cond_mean":"linear|binned|local_linear", "bins":64,
 *   "oracle_h":"exp(x)"}    -- oracle_h wins over cond_mean when present
 * Returns the flat decomposition report as JSON. */
NRWE_EXPORT nrwe_status nrwe_decompose(const nrwe_dataset* ds,
                                       const char* options_json, char** out);

/* Local-coefficient recombination over binned cells; same options. */
NRWE_EXPORT nrwe_status nrwe_corollary1(const nrwe_dataset* ds,
                                        const char* options_json, char** out);

/* Univariate Yitzhaki weight curve as two-column CSV (t,w).
 * options: {"grid_points":512} */
NRWE_EXPORT nrwe_status nrwe_yitzhaki_curve(const nrwe_dataset* ds,
                                            const char* options_json, char** out);

/* Conditional weight field as JSON (grid, per-cell curves, masses).
 * options: {"mode":"nrwe|ols", "cond_mean":"binned", "bins":64,
 *           "grid_points":512} */
NRWE_EXPORT nrwe_status nrwe_weight_field(const nrwe_dataset* ds,
                                          const char* options_json, char** out);

/* Binned E[T|x_j] profile as CSV (x_lo,x_hi,x_mid,mean_t,count,sparse).
 * options: {"control":"x", "bins":32} */
NRWE_EXPORT nrwe_status nrwe_profile(const nrwe_dataset* ds,
                                     const char* options_json, char** out);

/* Serialized conditional-mean model (JSON document for reuse). */
NRWE_EXPORT nrwe_status nrwe_cond_mean_fit(const nrwe_dataset* ds,
                                           const char* options_json, char** out);

/* ---- simulation study -------------------------------------------------- */

/* config: {"dgp":"table1-row1"|{...spec...}, "n":200000, "reps":50,
 *          "seed":42, "mu":"oracle|linear|binned|local_linear",
 *          "threads":1}
 * Returns {"summary":{...}, "report_csv":"..."} where report_csv holds one
 * line per replication. */
NRWE_EXPORT nrwe_status nrwe_monte_carlo(const char* config_json, char** out);

/* ---- efficiency / uniqueness verification ------------------------------ */

/* config (all optional): {"t_grid":512, "x_grid":64, "h":"sin(x)",
 *  "sigma":"1", "x_range":[0,5], "sigma2":1.0, "n_perturbations":100,
 *  "basis_size":16, "seed":42}
 * Returns a JSON report with the variance bound at the optimal weights, the
 * closed-form minimum, perturbation excesses, and the uniqueness probe. */
NRWE_EXPORT nrwe_status nrwe_verify_efficiency(const char* config_json,
                                               char** out);

#ifdef __cplusplus
}
#endif

#endif /* NRWE_H */
