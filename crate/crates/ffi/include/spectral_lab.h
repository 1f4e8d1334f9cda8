#ifndef SPECTRAL_LAB_H
#define SPECTRAL_LAB_H

#include <stddef.h>
#include <stdint.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_INPUT = 2,
  SL_STATUS_NO_CONVERGENCE = 3,
  SL_STATUS_VERDICT_FAIL = 4,
  SL_STATUS_IO = 5,
  SL_STATUS_PANIC = 6,
  SL_STATUS_OUT_OF_RANGE = 7,
} SlStatus;

typedef enum SlVerdict {
  SL_VERDICT_PASS = 0,
  SL_VERDICT_PASS_VACUOUS = 1,
  SL_VERDICT_FAIL = 2,
  SL_VERDICT_FLAGGED = 3,
} SlVerdict;

/**
 * Truncated basis with its quadrature grid.
 */
typedef struct SlBasis SlBasis;

typedef struct SlOperator SlOperator;

typedef struct SlSpectrum SlSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Message of the last failed call on this thread; valid until the next
 * failing call on the same thread.
 */
const char *sl_last_error(void);

/**
 * Hermite tensor basis in `dim` = 1 or 2 dimensions.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SlStatus sl_basis_hermite(uintptr_t dim,
                               uintptr_t modes,
                               double length_scale,
                               struct SlBasis **out);

/**
 * Landau basis in the symmetric gauge.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SlStatus sl_basis_landau(double b0,
                              uintptr_t max_level,
                              uintptr_t max_angular,
                              struct SlBasis **out);

/**
 * Number of basis functions, 0 for a null handle.
 *
 * # Safety
 * `basis` must be null or a live handle from `sl_basis_*`.
 */
uintptr_t sl_basis_size(const struct SlBasis *basis);

/**
 * # Safety
 * `basis` must be null or a live handle not freed before.
 */
void sl_basis_free(struct SlBasis *basis);

/**
 * Unperturbed operator of the basis model.
 *
 * # Safety
 * `basis` must be a live handle and `out` writable.
 */
enum SlStatus sl_operator_p0(const struct SlBasis *basis, struct SlOperator **out);

/**
 * P₀ + V₁ with V₁ = (v1_re + i v1_im) exp(−|x|²/width²).
 *
 * # Safety
 * `basis` must be a live handle and `out` writable.
 */
enum SlStatus sl_operator_full(const struct SlBasis *basis,
                               double v1_re,
                               double v1_im,
                               double width,
                               struct SlOperator **out);

/**
 * Matrix dimension, 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
uintptr_t sl_operator_dim(const struct SlOperator *op);

/**
 * Copy the entries row-major into `re` and `im`, each of length `len`
 * (at least dim²).
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
enum SlStatus sl_operator_entries(const struct SlOperator *op,
                                  double *re,
                                  double *im,
                                  uintptr_t len);

/**
 * # Safety
 * `op` must be null or a live handle not freed before.
 */
void sl_operator_free(struct SlOperator *op);

/**
 * Eigenvalues (with residuals) of an operator.
 *
 * # Safety
 * `op` must be a live handle and `out` writable.
 */
enum SlStatus sl_eigenvalues(const struct SlOperator *op, struct SlSpectrum **out);

/**
 * # Safety
 * `spec` must be null or a live handle.
 */
uintptr_t sl_spectrum_len(const struct SlSpectrum *spec);

/**
 * Eigenvalue `index` in spectral order (real part, then imaginary part).
 *
 * # Safety
 * `spec` must be a live handle; `re`, `im` and `residual` writable.
 */
enum SlStatus sl_spectrum_get(const struct SlSpectrum *spec,
                              uintptr_t index,
                              double *re,
                              double *im,
                              double *residual);

/**
 * # Safety
 * `spec` must be null or a live handle not freed before.
 */
void sl_spectrum_free(struct SlSpectrum *spec);

/**
 * Escape function λ(x, ξ) for `n`-vectors `x` and `xi`.
 *
 * # Safety
 * `x` and `xi` must point to `n` readable doubles, `out` to one writable.
 */
enum SlStatus sl_eval_lambda(const double *x,
                             const double *xi,
                             uintptr_t n,
                             double m0,
                             double mu,
                             double delta,
                             double *out);

/**
 * Run a CLI subcommand (e.g. "spectrum") on a TOML config, writing
 * outputs under `out_dir`. The verdict is stored in `verdict`; a FAIL
 * verdict also returns `SL_STATUS_VERDICT_FAIL`.
 *
 * # Safety
 * `command`, `config_toml` and `out_dir` must be NUL-terminated strings;
 * `verdict` must be writable.
 */
enum SlStatus sl_run(const char *command,
                     const char *config_toml,
                     const char *out_dir,
                     enum SlVerdict *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRAL_LAB_H */
