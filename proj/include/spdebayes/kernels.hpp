#pragma once

#include <cstddef>
#include <string_view>

// Runtime-dispatched arithmetic kernels for the hot loops (time-stepper
// updates, piecewise-polynomial drift evaluation, reductions).
//
// Every kernel has a scalar reference implementation and optional SIMD
// variants (AVX2 on x86-64, NEON on aarch64). All variants are bit-exact
// equal to the scalar reference: elementwise kernels perform the same
// IEEE operations per element, and reductions use a fixed 4-accumulator
// blocking shared by all variants. This keeps results independent of the
// selected variant, which the equivalence tests assert.
//
// Selection: SPDE_BAYES_SIMD=scalar|avx2|neon|auto (default auto).

namespace spdebayes::kernels {

// Piecewise polynomial in local coordinates: piece p covers
// [breaks[p], breaks[p+1]) and evaluates
// sum_d coeffs[p*stride + d] * (x - breaks[p])^d.
// Zero outside [breaks[0], breaks[n_pieces]).
struct PiecewisePolyView {
    const double* breaks = nullptr;   // n_pieces + 1 ascending breakpoints
    const double* coeffs = nullptr;   // n_pieces x stride, low order first
    int n_pieces = 0;
    int stride = 0;                   // coefficients per piece (degree + 1)
};

struct Ops {
    // out[i] = x[i] + dt*drift[i] + noise_scale*noise[i]
    void (*fused_update)(const double* x, const double* drift, const double* noise,
                         double dt, double noise_scale, double* out, std::size_t n);
    // out[i] = x[i] + dt*drift[i]
    void (*drift_update)(const double* x, const double* drift, double dt,
                         double* out, std::size_t n);
    // out[i] = poly(x[i])
    void (*piecewise_poly_eval)(const PiecewisePolyView& poly, const double* x,
                                double* out, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    // sum_i (x[i]-y[i])^2
    double (*sum_sq_diff)(const double* x, const double* y, std::size_t n);
    std::string_view name;
};

// Active kernel table (resolved once, thread-safe).
const Ops& active();

// Specific variants, for equivalence tests. Entries may be null when the
// variant is not compiled in or not supported by the CPU.
const Ops& scalar_ops();
const Ops* avx2_ops();
const Ops* neon_ops();

inline void fused_update(const double* x, const double* drift, const double* noise,
                         double dt, double noise_scale, double* out, std::size_t n) {
    active().fused_update(x, drift, noise, dt, noise_scale, out, n);
}
inline void drift_update(const double* x, const double* drift, double dt,
                         double* out, std::size_t n) {
    active().drift_update(x, drift, dt, out, n);
}
inline void piecewise_poly_eval(const PiecewisePolyView& poly, const double* x,
                                double* out, std::size_t n) {
    active().piecewise_poly_eval(poly, x, out, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double dot(const double* x, const double* y, std::size_t n) {
    return active().dot(x, y, n);
}
inline double sum_sq_diff(const double* x, const double* y, std::size_t n) {
    return active().sum_sq_diff(x, y, n);
}

}  // namespace spdebayes::kernels
