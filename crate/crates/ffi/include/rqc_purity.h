#ifndef RQC_PURITY_H
#define RQC_PURITY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every function.
typedef enum {
  RQC_STATUS_OK = 0,
  RQC_STATUS_NULL_POINTER = 1,
  RQC_STATUS_INVALID_ARGUMENT = 2,
  RQC_STATUS_CAPACITY = 3,
  RQC_STATUS_NUMERICAL = 4,
  RQC_STATUS_PANIC = 5,
} RqcStatus;

// Sweep order for the contiguous edge model.
typedef enum {
  RQC_SWEEP_BEST = 0,
  RQC_SWEEP_WORST = 1,
} RqcSweep;

// Opaque graph handle.
typedef struct RqcGraph RqcGraph;

// Opaque purity series handle.
typedef struct RqcSeries RqcSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`) and returns the full message length in bytes. Returns 0
// when the last call succeeded. `buf` may be null to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t rqc_last_error_message(char *buf, size_t len);

// Static NUL-terminated version string.
const char *rqc_version(void);

// Builds a graph on `n` vertices with local dimension `d`.
//
// # Safety
// `offsets` must hold `n_edges + 1` entries, `vertices` at least
// `offsets[n_edges]`, and `out` must be writable.
RqcStatus rqc_graph_new(size_t n,
                        size_t d,
                        const size_t *offsets,
                        const size_t *vertices,
                        size_t n_edges,
                        RqcGraph **out);

// Parses `{"n": .., "d": .., "edges": [[..], ..]}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
RqcStatus rqc_graph_from_json(const char *json, RqcGraph **out);

// # Safety
// `g` must be null or a handle from this library, freed at most once.
void rqc_graph_free(RqcGraph *g);

// # Safety
// `g` must be a valid handle and `n_vertices`, `n_edges` writable.
RqcStatus rqc_graph_size(const RqcGraph *g, size_t *n_vertices, size_t *n_edges);

// Fraction of edges with vertices on both sides of `A`.
//
// # Safety
// `a` must hold `a_len` vertex indices and `out` be writable.
RqcStatus rqc_boundary_fraction(const RqcGraph *g, const size_t *a, size_t a_len, double *out);

// Expected purity over `k` uniformly random gates.
//
// # Safety
// Pointer arguments as for [`rqc_boundary_fraction`]; `out` receives a new
// series handle.
RqcStatus rqc_evolve_uniform(const RqcGraph *g,
                             const size_t *a,
                             size_t a_len,
                             size_t k,
                             RqcSeries **out);

// Purity after every prefix of a fixed sequence of edge indices.
//
// # Safety
// `sequence` must hold `len` entries; other pointers as above.
RqcStatus rqc_evolve_fixed(const RqcGraph *g,
                           const size_t *a,
                           size_t a_len,
                           const size_t *sequence,
                           size_t len,
                           RqcSeries **out);

// Expected purity for a Markov edge process. `kernel` is row-major
// `n_edges × n_edges`.
//
// # Safety
// `initial` must hold `n_edges` and `kernel` `n_edges²` entries.
RqcStatus rqc_evolve_markov(const RqcGraph *g,
                            const size_t *a,
                            size_t a_len,
                            const double *initial,
                            const double *kernel,
                            size_t k,
                            RqcSeries **out);

// Purity series on the complete graph `K_n`.
//
// # Safety
// `out` must be writable.
RqcStatus rqc_complete_graph_series(size_t n, size_t n_a, size_t d, size_t k, RqcSeries **out);

// Purity after `0..=n_c` sweeps of a chain of length `l` with `A` the first
// `l_a` sites.
//
// # Safety
// `out` must be writable.
RqcStatus rqc_chain_series(size_t l,
                           size_t l_a,
                           size_t d,
                           RqcSweep kind,
                           size_t n_c,
                           RqcSeries **out);

// Number of values in a series (steps plus one); 0 for a null handle.
//
// # Safety
// `s` must be null or a valid handle.
size_t rqc_series_len(const RqcSeries *s);

// Copies `min(len, series length)` values into `buf`.
//
// # Safety
// `buf` must be valid for `len` doubles.
RqcStatus rqc_series_values(const RqcSeries *s, double *buf, size_t len);

// # Safety
// `s` must be null or a handle from this library, freed at most once.
void rqc_series_free(RqcSeries *s);

// `E[Tr ρ_A^α]` after one Haar gate on a single edge.
//
// # Safety
// `out` must be writable.
RqcStatus rqc_single_edge_moment(size_t alpha, size_t d, double *out);

// # Safety
// `out` must be writable.
RqcStatus rqc_single_edge_variance(size_t d, double *out);

// Random-edge-model purity after `k` steps at boundary fraction `q`.
//
// # Safety
// `out` must be writable.
RqcStatus rqc_rem_purity(double q, size_t d, size_t k, double *out);

// # Safety
// `out` must be writable.
RqcStatus rqc_complete_graph_asymptote(size_t n, size_t n_a, size_t d, double *out);

// Spectral gap and conditioning of the complete-graph operator.
//
// # Safety
// `delta` and `norm_product` must be writable.
RqcStatus rqc_spectral_gap(size_t n, size_t d, double *delta, double *norm_product);

// # Safety
// `out` must be writable.
RqcStatus rqc_k_min_bound(size_t n, size_t n_a, size_t d, double eps, uint64_t *out);

// # Safety
// `out` must be writable.
RqcStatus rqc_chain_asymptote(size_t l, size_t l_a, size_t d, double *out);

// Largest eigenvalue below 1 of the chain sweep operator.
//
// # Safety
// `out` must be writable.
RqcStatus rqc_chain_lambda2(size_t l, size_t l_a, size_t d, RqcSweep kind, double *out);

// Monte Carlo estimate of `E[Tr ρ_A^α]` from Haar-random statevector runs.
// A null `sequence` draws `k` uniform edges per sample, otherwise the
// `k = len` edge indices are applied in order.
//
// # Safety
// `sequence` must be null or hold `len` entries; `mean` and `stderr`
// writable.
RqcStatus rqc_oracle_moment(const RqcGraph *g,
                            const size_t *a,
                            size_t a_len,
                            const size_t *sequence,
                            size_t len,
                            size_t k,
                            size_t alpha,
                            size_t samples,
                            uint64_t seed,
                            double *mean,
                            double *stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RQC_PURITY_H */
