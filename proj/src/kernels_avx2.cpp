// AVX2 variants. Compiled with -mavx2 (no -mfma: mul/add must round like the
// scalar reference so all variants stay bit-exact equal).

#include "spdebayes/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SPDEBAYES_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define SPDEBAYES_HAVE_AVX2_TU 0
#endif

namespace spdebayes::kernels {

#if SPDEBAYES_HAVE_AVX2_TU

namespace {

void fused_update_avx2(const double* x, const double* drift, const double* noise,
                       double dt, double noise_scale, double* out, std::size_t n) {
    const __m256d vdt = _mm256_set1_pd(dt);
    const __m256d vns = _mm256_set1_pd(noise_scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vd = _mm256_mul_pd(vdt, _mm256_loadu_pd(drift + i));
        const __m256d vn = _mm256_mul_pd(vns, _mm256_loadu_pd(noise + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_add_pd(vx, vd), vn));
    }
    for (; i < n; ++i) out[i] = (x[i] + dt * drift[i]) + noise_scale * noise[i];
}

void drift_update_avx2(const double* x, const double* drift, double dt,
                       double* out, std::size_t n) {
    const __m256d vdt = _mm256_set1_pd(dt);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vd = _mm256_mul_pd(vdt, _mm256_loadu_pd(drift + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(vx, vd));
    }
    for (; i < n; ++i) out[i] = x[i] + dt * drift[i];
}

// Every piece's Horner chain is evaluated on the full vector and blended by
// disjoint interval masks, so each lane gets exactly the value the scalar
// reference computes for its piece.
void piecewise_poly_eval_avx2(const PiecewisePolyView& poly, const double* x,
                              double* out, std::size_t n) {
    const __m256d vlo = _mm256_set1_pd(poly.breaks[0]);
    const __m256d vhi = _mm256_set1_pd(poly.breaks[poly.n_pieces]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        __m256d acc = _mm256_setzero_pd();
        for (int p = 0; p < poly.n_pieces; ++p) {
            const __m256d left = _mm256_set1_pd(poly.breaks[p]);
            const __m256d geq = _mm256_cmp_pd(vx, left, _CMP_GE_OQ);
            const __m256d lt =
                _mm256_cmp_pd(vx, _mm256_set1_pd(poly.breaks[p + 1]), _CMP_LT_OQ);
            const __m256d mask = _mm256_and_pd(geq, lt);
            if (_mm256_movemask_pd(mask) == 0) continue;
            const double* c = poly.coeffs + static_cast<std::size_t>(p) * poly.stride;
            const __m256d t = _mm256_sub_pd(vx, left);
            __m256d v = _mm256_set1_pd(c[poly.stride - 1]);
            for (int d = poly.stride - 2; d >= 0; --d) {
                v = _mm256_add_pd(_mm256_mul_pd(v, t), _mm256_set1_pd(c[d]));
            }
            acc = _mm256_blendv_pd(acc, v, mask);
        }
        // Lanes outside [lo, hi) keep 0.
        const __m256d inside =
            _mm256_and_pd(_mm256_cmp_pd(vx, vlo, _CMP_GE_OQ), _mm256_cmp_pd(vx, vhi, _CMP_LT_OQ));
        _mm256_storeu_pd(out + i, _mm256_and_pd(acc, inside));
    }
    if (i < n) scalar_ops().piecewise_poly_eval(poly, x + i, out + i, n - i);
}

double reduce_like_scalar(__m256d acc) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) lanes[i % 4] += x[i];
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) lanes[i % 4] += x[i] * y[i];
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double sum_sq_diff_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        lanes[i % 4] += d * d;
    }
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

const Ops kAvx2Ops = {
    fused_update_avx2, drift_update_avx2, piecewise_poly_eval_avx2,
    sum_avx2,          dot_avx2,          sum_sq_diff_avx2,
    "avx2",
};

}  // namespace

const Ops* avx2_ops() {
    if (__builtin_cpu_supports("avx2")) return &kAvx2Ops;
    return nullptr;
}

#else

const Ops* avx2_ops() { return nullptr; }

#endif  // SPDEBAYES_HAVE_AVX2_TU

}  // namespace spdebayes::kernels
