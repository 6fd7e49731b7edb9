#ifndef BESSEL_DT_H
#define BESSEL_DT_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BdtStatus {
  BDT_STATUS_OK = 0,
  BDT_STATUS_NULL_POINTER = 1,
  BDT_STATUS_INVALID_PARAMETER = 2,
  BDT_STATUS_DOMAIN = 3,
  BDT_STATUS_NOT_CONVERGED = 4,
  BDT_STATUS_TAIL_ESTIMATE = 5,
  BDT_STATUS_WINDOW_OUT_OF_RANGE = 6,
  BDT_STATUS_NOT_INCREASING = 7,
  BDT_STATUS_NOT_LACUNARY = 8,
  BDT_STATUS_NON_FINITE = 9,
  BDT_STATUS_EMPTY = 10,
  BDT_STATUS_PANIC = 11,
} BdtStatus;

// Extension of sampled input beyond its last node.
typedef enum BdtTail {
  BDT_TAIL_ZERO = 0,
  BDT_TAIL_CONSTANT = 1,
  BDT_TAIL_POWER_LAW = 2,
} BdtTail;

typedef struct BdtFunction BdtFunction;

typedef struct BdtKernel BdtKernel;

typedef struct BdtSetup BdtSetup;

// Kernel value with its first partial derivatives.
typedef struct BdtJet {
  double value;
  double dt;
  double dx;
  double dy;
} BdtJet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *bdt_version(void);

// Message of the last failed call on this thread; empty after a success.
//
// The pointer stays valid until the next call into the library on this thread.
const char *bdt_last_error_message(void);

// Creates a kernel for `lambda > 0` with default quadrature settings.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum BdtStatus bdt_kernel_new(double lambda, struct BdtKernel **out);

// # Safety
// `kernel` must be null or a handle from [`bdt_kernel_new`] not yet freed.
void bdt_kernel_free(struct BdtKernel *kernel);

// # Safety
// `kernel` must be a live handle and `out` writable.
enum BdtStatus bdt_kernel_value(const struct BdtKernel *kernel,
                                double t,
                                double x,
                                double y,
                                double *out);

// # Safety
// `kernel` must be a live handle and `out` writable.
enum BdtStatus bdt_kernel_jet(const struct BdtKernel *kernel,
                              double t,
                              double x,
                              double y,
                              struct BdtJet *out);

// `amplitude * exp(-((x - center)/width)^2 / 2)`.
//
// # Safety
// `out` must be writable.
enum BdtStatus bdt_function_gaussian(double amplitude,
                                     double center,
                                     double width,
                                     struct BdtFunction **out);

// `height` on `[lo, hi)`, zero elsewhere.
//
// # Safety
// `out` must be writable.
enum BdtStatus bdt_function_indicator(double lo,
                                      double hi,
                                      double height,
                                      struct BdtFunction **out);

// Function given by `n` samples on increasing positive nodes.
//
// `tail_exponent` is used only with [`BdtTail::PowerLaw`].
//
// # Safety
// `nodes` and `values` must point to `n` doubles, and `out` must be writable.
enum BdtStatus bdt_function_sampled(const double *nodes,
                                    const double *values,
                                    size_t n,
                                    enum BdtTail tail,
                                    double tail_exponent,
                                    struct BdtFunction **out);

// # Safety
// `function` must be null or a live handle.
void bdt_function_free(struct BdtFunction *function);

// Sequence `a_j` for `j = j_min .. j_min + count - 1` with `count - 1` coefficients `v_j`.
//
// # Safety
// `times` must point to `count` doubles, `coefficients` to `count - 1`, and `out` must be writable.
enum BdtStatus bdt_setup_new(int64_t j_min,
                             const double *times,
                             const double *coefficients,
                             size_t count,
                             double rho,
                             struct BdtSetup **out);

// # Safety
// `setup` must be null or a live handle.
void bdt_setup_free(struct BdtSetup *setup);

// Writes `P_t f` at the `n` increasing points `xs` into `out`.
//
// # Safety
// Handles must be live, `xs` and `out` must hold `n` doubles.
enum BdtStatus bdt_poisson_apply(const struct BdtKernel *kernel,
                                 const struct BdtFunction *function,
                                 double t,
                                 const double *xs,
                                 size_t n,
                                 double *out);

// Writes `T_N f` for the window `N = (n1, n2)` at the points `xs` into `out`.
//
// # Safety
// Handles must be live, `xs` and `out` must hold `n` doubles.
enum BdtStatus bdt_apply_t_n(const struct BdtKernel *kernel,
                             const struct BdtSetup *setup,
                             const struct BdtFunction *function,
                             int64_t n1,
                             int64_t n2,
                             const double *xs,
                             size_t n,
                             double *out);

// Writes the truncated maximal transform `T*_M f` at the points `xs` into `out`.
//
// # Safety
// Handles must be live, `xs` and `out` must hold `n` doubles.
enum BdtStatus bdt_maximal_t_star(const struct BdtKernel *kernel,
                                  const struct BdtSetup *setup,
                                  const struct BdtFunction *function,
                                  int64_t m_cap,
                                  const double *xs,
                                  size_t n,
                                  double *out);

// Bessel function of the first kind `J_nu(x)` for `nu > -1/2`, `x >= 0`.
//
// # Safety
// `out` must be writable.
enum BdtStatus bdt_bessel_j(double nu, double x, double *out);

// Measure `x^{2 lambda} dx` of the interval of `radius` around `center` within the half-line.
//
// # Safety
// `out` must be writable.
enum BdtStatus bdt_measure_interval(double lambda, double center, double radius, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BESSEL_DT_H */
