#include "spdebayes/kernels.hpp"

#include <cstdlib>
#include <string>

namespace spdebayes::kernels {

namespace {

void fused_update_scalar(const double* x, const double* drift, const double* noise,
                         double dt, double noise_scale, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (x[i] + dt * drift[i]) + noise_scale * noise[i];
    }
}

void drift_update_scalar(const double* x, const double* drift, double dt,
                         double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] + dt * drift[i];
    }
}

void piecewise_poly_eval_scalar(const PiecewisePolyView& poly, const double* x,
                                double* out, std::size_t n) {
    const double lo = poly.breaks[0];
    const double hi = poly.breaks[poly.n_pieces];
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        if (!(xi >= lo && xi < hi)) {
            out[i] = 0.0;
            continue;
        }
        int p = 0;
        while (p + 1 < poly.n_pieces && xi >= poly.breaks[p + 1]) ++p;
        const double t = xi - poly.breaks[p];
        const double* c = poly.coeffs + static_cast<std::size_t>(p) * poly.stride;
        double v = c[poly.stride - 1];
        for (int d = poly.stride - 2; d >= 0; --d) v = v * t + c[d];
        out[i] = v;
    }
}

// Reductions use 4 accumulators in a fixed pattern so that SIMD variants can
// reproduce the exact same summation order.
double sum_scalar(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i];
        acc[1] += x[i + 1];
        acc[2] += x[i + 2];
        acc[3] += x[i + 3];
    }
    for (; i < n; ++i) acc[i % 4] += x[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    for (; i < n; ++i) acc[i % 4] += x[i] * y[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double sum_sq_diff_scalar(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = x[i] - y[i];
        const double d1 = x[i + 1] - y[i + 1];
        const double d2 = x[i + 2] - y[i + 2];
        const double d3 = x[i + 3] - y[i + 3];
        acc[0] += d0 * d0;
        acc[1] += d1 * d1;
        acc[2] += d2 * d2;
        acc[3] += d3 * d3;
    }
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        acc[i % 4] += d * d;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

const Ops kScalarOps = {
    fused_update_scalar, drift_update_scalar, piecewise_poly_eval_scalar,
    sum_scalar,          dot_scalar,          sum_sq_diff_scalar,
    "scalar",
};

const Ops& resolve() {
    const char* env = std::getenv("SPDE_BAYES_SIMD");
    const std::string mode = env ? env : "auto";
    if (mode == "scalar") return kScalarOps;
    if (mode == "avx2") {
        if (const Ops* ops = avx2_ops()) return *ops;
        return kScalarOps;
    }
    if (mode == "neon") {
        if (const Ops* ops = neon_ops()) return *ops;
        return kScalarOps;
    }
    if (const Ops* ops = avx2_ops()) return *ops;
    if (const Ops* ops = neon_ops()) return *ops;
    return kScalarOps;
}

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

const Ops& active() {
    static const Ops& ops = resolve();
    return ops;
}

}  // namespace spdebayes::kernels
