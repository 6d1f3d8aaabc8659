#ifndef SYMFCS_H
#define SYMFCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Symmetry sector selector; `Both` means no restriction.
typedef enum SymfcsSector {
  SYMFCS_SECTOR_SYMMETRIC = 0,
  SYMFCS_SECTOR_ANTISYMMETRIC = 1,
  SYMFCS_SECTOR_BOTH = 2,
} SymfcsSector;

typedef enum SymfcsStatus {
  SYMFCS_STATUS_OK = 0,
  SYMFCS_STATUS_NULL_POINTER = 1,
  SYMFCS_STATUS_INVALID_PARAMS = 2,
  SYMFCS_STATUS_BROKEN_SYMMETRY = 3,
  SYMFCS_STATUS_EMPTY_OVERLAP = 4,
  SYMFCS_STATUS_NUMERICAL = 5,
  SYMFCS_STATUS_BUFFER_TOO_SMALL = 6,
  SYMFCS_STATUS_NOT_FROZEN = 7,
  SYMFCS_STATUS_INTERNAL = 99,
} SymfcsStatus;

// Tilted-generator evaluator bound to one model.
typedef struct SymfcsEngine SymfcsEngine;

// Model parameters.
typedef struct SymfcsModel SymfcsModel;

typedef struct SymfcsAverages {
  double q_s;
  double q_a;
  double a_s;
  double a_a;
} SymfcsAverages;

typedef struct SymfcsGeometry {
  double a_c;
  double u0;
  double kappa;
  double delta;
  double q_s;
} SymfcsGeometry;

typedef struct SymfcsEnsembleSummary {
  uintptr_t n_traj;
  double mean_q;
  double stderr_q;
  double mean_a;
  double stderr_a;
  // Final-time `⟨ξ⟩`.
  double mean_xi_final;
  // Fraction frozen into the antisymmetric sector; NaN unless every
  // trajectory froze.
  double fraction_to_a;
  // Trajectories still between the sectors at the final time.
  uintptr_t unfrozen;
} SymfcsEnsembleSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread (empty after success).
// Valid until the next call into the library on the same thread.
const char *symfcs_last_error(void);

// Library version, a static NUL-terminated string.
const char *symfcs_version(void);

// # Safety
// `out_model` must be a valid pointer to writable storage.
enum SymfcsStatus symfcs_model_new(double b_z,
                                   double gamma_bath,
                                   double n_bath,
                                   double gamma_dephase,
                                   struct SymfcsModel **out_model);

// # Safety
// `model` must come from `symfcs_model_new` and not be freed twice.
void symfcs_model_free(struct SymfcsModel *model);

// Gallavotti–Cohen constant `ln[n/(n+1)]`.
//
// # Safety
// Pointers must be valid.
enum SymfcsStatus symfcs_model_kappa(const struct SymfcsModel *model, double *out_kappa);

// Stationary density matrix, written row-major as 64 real and 64
// imaginary parts. `Both` requests the unique steady state (γ > 0 only).
//
// # Safety
// `re` and `im` must each point to `len` writable doubles.
enum SymfcsStatus symfcs_steady_state(const struct SymfcsModel *model,
                                      enum SymfcsSector sector,
                                      double *re,
                                      double *im,
                                      uintptr_t len);

// # Safety
// Pointers must be valid.
enum SymfcsStatus symfcs_engine_new(const struct SymfcsModel *model,
                                    struct SymfcsEngine **out_engine);

// # Safety
// `engine` must come from `symfcs_engine_new` and not be freed twice.
void symfcs_engine_free(struct SymfcsEngine *engine);

// Scaled cumulant generating function `μ(λ, ε)` restricted to the sectors
// in `overlap`. `out_sector` (optional) receives the dominant sector. When
// dephasing breaks the symmetry the overlap is ignored, the full generator
// is used and `out_sector` is `Both`.
//
// # Safety
// Pointers must be valid; `out_sector` may be null.
enum SymfcsStatus symfcs_engine_mu(const struct SymfcsEngine *engine,
                                   double lambda,
                                   double epsilon,
                                   enum SymfcsSector overlap,
                                   double *out_mu,
                                   enum SymfcsSector *out_sector);

// Leading eigenvalue of one sector's tilted block (γ = 0 only).
//
// # Safety
// Pointers must be valid.
enum SymfcsStatus symfcs_engine_sector_eigenvalue(const struct SymfcsEngine *engine,
                                                  double lambda,
                                                  double epsilon,
                                                  enum SymfcsSector sector,
                                                  double *out_re,
                                                  double *out_im);

// Sector mean current and activity (γ = 0 only).
//
// # Safety
// Pointers must be valid.
enum SymfcsStatus symfcs_engine_averages(const struct SymfcsEngine *engine,
                                         struct SymfcsAverages *out_avg);

// Critical activity, coexistence-line slope, κ and kink gap (γ = 0 only).
//
// # Safety
// Pointers must be valid.
enum SymfcsStatus symfcs_engine_geometry(const struct SymfcsEngine *engine,
                                         struct SymfcsGeometry *out_geo);

// Quantum-jump ensemble from the pure state with antisymmetric weight
// `weight_a`. Deterministic in `seed`.
//
// # Safety
// Pointers must be valid.
enum SymfcsStatus symfcs_ensemble_run(const struct SymfcsModel *model,
                                      double weight_a,
                                      double duration,
                                      uintptr_t n_traj,
                                      uint64_t seed,
                                      struct SymfcsEnsembleSummary *out_summary);

// Master-equation `Tr(P₋ e^{Lt} ρ₀)` at non-decreasing `times`, for the
// same initial state as [`symfcs_ensemble_run`].
//
// # Safety
// `times` and `out_xi` must each point to `n` doubles.
enum SymfcsStatus symfcs_xi_master_equation(const struct SymfcsModel *model,
                                            double weight_a,
                                            const double *times,
                                            uintptr_t n,
                                            double *out_xi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMFCS_H */
