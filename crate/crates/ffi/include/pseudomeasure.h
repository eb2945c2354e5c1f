#ifndef PSEUDOMEASURE_H
#define PSEUDOMEASURE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Opaque modular pseudo-measure built from a polynomial seed.
typedef struct PmMeasure PmMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *pm_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
void pm_string_free(char *s);

// Continued fraction of a rational such as "3/7", written as "[0;2,3]".
int32_t pm_cf(const char *x, char **out);

// Dimension of the weight-`weight` seed space.
int32_t pm_seed_dimension(uint32_t weight, uint32_t *out);

// Measure from the `index`-th basis seed of the given weight.
int32_t pm_measure_from_seed(uint32_t weight, uint32_t index, struct PmMeasure **out);

void pm_measure_free(struct PmMeasure *m);

// μ(from, to) as a JSON array of coefficient strings, e.g. `["1","0","-1"]`.
// Points are written "p/q" or "inf".
int32_t pm_measure_eval(const struct PmMeasure *m, const char *from, const char *to, char **out);

// Checks the Lévy–Mellin Dirichlet-series identity up to `truncation`;
// `*pass` is 1 when every coefficient agrees.
int32_t pm_levymellin_verify(const struct PmMeasure *m, uint32_t truncation, int32_t *pass);

// Exact limiting value `μ^lim(∞, θ)` for the `index`-th permutation-module
// seed on Γ₀(level), as JSON. θ is written like "[1;(2)]".
int32_t pm_limiting_gamma0(uint64_t level, uint32_t index, const char *cf, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSEUDOMEASURE_H */
