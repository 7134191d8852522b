// NEON variants (aarch64). Mirrors the AVX2 logic with 2-lane f64 vectors;
// reductions keep the shared 4-accumulator blocking via two vector
// accumulators per block of 4.

#include "spdebayes/kernels.hpp"

#if defined(__aarch64__)
#define SPDEBAYES_HAVE_NEON_TU 1
#include <arm_neon.h>
#else
#define SPDEBAYES_HAVE_NEON_TU 0
#endif

namespace spdebayes::kernels {

#if SPDEBAYES_HAVE_NEON_TU

namespace {

void fused_update_neon(const double* x, const double* drift, const double* noise,
                       double dt, double noise_scale, double* out, std::size_t n) {
    const float64x2_t vdt = vdupq_n_f64(dt);
    const float64x2_t vns = vdupq_n_f64(noise_scale);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vx = vld1q_f64(x + i);
        const float64x2_t vd = vmulq_f64(vdt, vld1q_f64(drift + i));
        const float64x2_t vn = vmulq_f64(vns, vld1q_f64(noise + i));
        vst1q_f64(out + i, vaddq_f64(vaddq_f64(vx, vd), vn));
    }
    for (; i < n; ++i) out[i] = (x[i] + dt * drift[i]) + noise_scale * noise[i];
}

void drift_update_neon(const double* x, const double* drift, double dt,
                       double* out, std::size_t n) {
    const float64x2_t vdt = vdupq_n_f64(dt);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vx = vld1q_f64(x + i);
        vst1q_f64(out + i, vaddq_f64(vx, vmulq_f64(vdt, vld1q_f64(drift + i))));
    }
    for (; i < n; ++i) out[i] = x[i] + dt * drift[i];
}

void piecewise_poly_eval_neon(const PiecewisePolyView& poly, const double* x,
                              double* out, std::size_t n) {
    const float64x2_t vlo = vdupq_n_f64(poly.breaks[0]);
    const float64x2_t vhi = vdupq_n_f64(poly.breaks[poly.n_pieces]);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vx = vld1q_f64(x + i);
        float64x2_t acc = vdupq_n_f64(0.0);
        for (int p = 0; p < poly.n_pieces; ++p) {
            const float64x2_t left = vdupq_n_f64(poly.breaks[p]);
            const uint64x2_t geq = vcgeq_f64(vx, left);
            const uint64x2_t lt = vcltq_f64(vx, vdupq_n_f64(poly.breaks[p + 1]));
            const uint64x2_t mask = vandq_u64(geq, lt);
            if (vgetq_lane_u64(mask, 0) == 0 && vgetq_lane_u64(mask, 1) == 0) continue;
            const double* c = poly.coeffs + static_cast<std::size_t>(p) * poly.stride;
            const float64x2_t t = vsubq_f64(vx, left);
            float64x2_t v = vdupq_n_f64(c[poly.stride - 1]);
            for (int d = poly.stride - 2; d >= 0; --d) {
                v = vaddq_f64(vmulq_f64(v, t), vdupq_n_f64(c[d]));
            }
            acc = vbslq_f64(mask, v, acc);
        }
        const uint64x2_t inside = vandq_u64(vcgeq_f64(vx, vlo), vcltq_f64(vx, vhi));
        acc = vreinterpretq_f64_u64(
            vandq_u64(vreinterpretq_u64_f64(acc), inside));
        vst1q_f64(out + i, acc);
    }
    if (i < n) scalar_ops().piecewise_poly_eval(poly, x + i, out + i, n - i);
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t a01 = vdupq_n_f64(0.0);
    float64x2_t a23 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a01 = vaddq_f64(a01, vld1q_f64(x + i));
        a23 = vaddq_f64(a23, vld1q_f64(x + i + 2));
    }
    double lanes[4] = {vgetq_lane_f64(a01, 0), vgetq_lane_f64(a01, 1),
                       vgetq_lane_f64(a23, 0), vgetq_lane_f64(a23, 1)};
    for (; i < n; ++i) lanes[i % 4] += x[i];
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t a01 = vdupq_n_f64(0.0);
    float64x2_t a23 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a01 = vaddq_f64(a01, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        a23 = vaddq_f64(a23, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double lanes[4] = {vgetq_lane_f64(a01, 0), vgetq_lane_f64(a01, 1),
                       vgetq_lane_f64(a23, 0), vgetq_lane_f64(a23, 1)};
    for (; i < n; ++i) lanes[i % 4] += x[i] * y[i];
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double sum_sq_diff_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t a01 = vdupq_n_f64(0.0);
    float64x2_t a23 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
        a01 = vaddq_f64(a01, vmulq_f64(d0, d0));
        a23 = vaddq_f64(a23, vmulq_f64(d1, d1));
    }
    double lanes[4] = {vgetq_lane_f64(a01, 0), vgetq_lane_f64(a01, 1),
                       vgetq_lane_f64(a23, 0), vgetq_lane_f64(a23, 1)};
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        lanes[i % 4] += d * d;
    }
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

const Ops kNeonOps = {
    fused_update_neon, drift_update_neon, piecewise_poly_eval_neon,
    sum_neon,          dot_neon,          sum_sq_diff_neon,
    "neon",
};

}  // namespace

const Ops* neon_ops() { return &kNeonOps; }

#else

const Ops* neon_ops() { return nullptr; }

#endif  // SPDEBAYES_HAVE_NEON_TU

}  // namespace spdebayes::kernels
