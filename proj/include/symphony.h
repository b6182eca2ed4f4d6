/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the symphony routing library. All functions return a
 * sym_status; outputs are written through caller-provided buffers or opaque
 * handles. sym_last_error() describes the most recent failure on the calling
 * thread. Matrices are row-major doubles.
 */
#ifndef SYMPHONY_H
#define SYMPHONY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SYMPHONY_API __declspec(dllexport)
#else
#define SYMPHONY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sym_status {
    SYM_OK = 0,
    SYM_ERR_ARGUMENT = 1,
    SYM_ERR_DIMENSION = 2,
    SYM_ERR_FROZEN = 3,
    SYM_ERR_STATE = 4,
    SYM_ERR_NUMERICAL = 5,
    SYM_ERR_IO = 6,
    SYM_ERR_INTERNAL = 7
} sym_status;

SYMPHONY_API const char* sym_version(void);
SYMPHONY_API const char* sym_status_name(sym_status status);
SYMPHONY_API const char* sym_last_error(void);

/* Worker-thread cap for internal parallel loops (results never depend on it). */
SYMPHONY_API sym_status sym_set_threads(int threads);

/* ------------------------------------------------------------------ routers */

typedef struct sym_router sym_router;

SYMPHONY_API sym_status sym_router_linear(size_t experts, size_t dim, const double* weights,
                                          const double* bias, sym_router** out);
SYMPHONY_API sym_status sym_router_cosine(size_t experts, size_t dim, size_t proj_dim,
                                          const double* proj, const double* expert_dirs,
                                          double temperature, sym_router** out);
SYMPHONY_API sym_status sym_router_random(size_t experts, size_t dim, uint64_t seed,
                                          sym_router** out);
SYMPHONY_API void sym_router_free(sym_router* router);

/* scores: tokens x experts. */
SYMPHONY_API sym_status sym_router_scores(const sym_router* router, const double* tokens,
                                          size_t n_tokens, size_t dim, double* scores);

/* ------------------------------------------------------------------- gating */

SYMPHONY_API sym_status sym_softmax(const double* scores, size_t n_tokens, size_t experts,
                                    double* gates);

/* indices: the k largest entries, lowest index on ties, ascending. */
SYMPHONY_API sym_status sym_topk(const double* values, size_t count, int k, int* indices);

/* Sparse gates (n_tokens x experts) plus per-token ascending indices
 * (n_tokens x k). renormalize selects the convention for softmax-first. */
SYMPHONY_API sym_status sym_gate_logits_first(const double* scores, size_t n_tokens,
                                              size_t experts, int k, double* gates,
                                              int* indices);
SYMPHONY_API sym_status sym_gate_softmax_first(const double* scores, size_t n_tokens,
                                               size_t experts, int k, int renormalize,
                                               double* gates, int* indices);

/* ----------------------------------------------------------- social graph */

typedef struct sym_adjacency sym_adjacency;

/* norm_mode: 0 = RowNorm, 1 = Sinkhorn. */
SYMPHONY_API sym_status sym_adjacency_new(size_t experts, double beta, int norm_mode,
                                          sym_adjacency** out);
SYMPHONY_API void sym_adjacency_free(sym_adjacency* adjacency);

/* indices: n_tokens x k ascending expert ids per token. */
SYMPHONY_API sym_status sym_adjacency_accumulate(sym_adjacency* adjacency, const int* indices,
                                                 size_t n_tokens, int k);
SYMPHONY_API sym_status sym_adjacency_update(sym_adjacency* adjacency);
SYMPHONY_API sym_status sym_adjacency_freeze(sym_adjacency* adjacency, int frozen);
SYMPHONY_API sym_status sym_adjacency_updates(const sym_adjacency* adjacency, long* updates);
SYMPHONY_API sym_status sym_adjacency_values(const sym_adjacency* adjacency, double* values);

/* smoothed = A . dense per token (bootstrap passes dense through). */
SYMPHONY_API sym_status sym_adjacency_smooth(const sym_adjacency* adjacency, const double* dense,
                                             size_t n_tokens, double* smoothed);

/* Full symphony routing step on raw scores. While the adjacency is not
 * frozen, base-gate co-selections are accumulated as a side effect. */
SYMPHONY_API sym_status sym_adjacency_route(sym_adjacency* adjacency, const double* scores,
                                            size_t n_tokens, int k, int renormalize,
                                            double* gates, int* indices);

/* eigenvalues: descending, length = experts. */
SYMPHONY_API sym_status sym_adjacency_spectral(const sym_adjacency* adjacency,
                                               double* eigenvalues, double* rho, int* connected);

SYMPHONY_API sym_status sym_adjacency_save(const sym_adjacency* adjacency, const char* path);
SYMPHONY_API sym_status sym_adjacency_load(const char* path, sym_adjacency** out);

/* --------------------------------------------------------------- overhead */

SYMPHONY_API sym_status sym_estimate_overhead(uint64_t experts, uint64_t k, uint64_t tokens,
                                              uint64_t layers, uint64_t bytes_per_entry,
                                              uint64_t* train_flops, uint64_t* infer_flops,
                                              uint64_t* train_bytes, uint64_t* infer_bytes);

SYMPHONY_API sym_status sym_format_mib(uint64_t bytes, char* buffer, size_t buffer_len);
SYMPHONY_API sym_status sym_format_gflops(uint64_t flops, char* buffer, size_t buffer_len);

/* ------------------------------------------------------------ experiments */

typedef struct sym_run_options {
    const char* manifest_path;
    const char* out_dir;
    int has_seed_override;
    uint64_t seed_override;
    int threads; /* 0 keeps the current budget */
    int quiet;
} sym_run_options;

SYMPHONY_API sym_status sym_run_train(const sym_run_options* options);
SYMPHONY_API sym_status sym_run_eval(const sym_run_options* options);
SYMPHONY_API sym_status sym_run_attack_eval(const sym_run_options* options);
SYMPHONY_API sym_status sym_run_verify_theorem1(const sym_run_options* options);
SYMPHONY_API sym_status sym_run_verify_prop1(const sym_run_options* options);
SYMPHONY_API sym_status sym_run_bench(const sym_run_options* options);
SYMPHONY_API sym_status sym_run_dump_adjacency(const sym_run_options* options);

#ifdef __cplusplus
}
#endif

#endif /* SYMPHONY_H */
