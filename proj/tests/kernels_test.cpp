#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "spdebayes/kernels.hpp"

using namespace spdebayes;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

// A 3-piece polynomial resembling the truncated reaction shapes.
struct TestPoly {
    std::vector<double> breaks{-3.5, -3.25, 3.25, 3.5};
    std::vector<double> coeffs;
    TestPoly() {
        coeffs.assign(3 * 8, 0.0);
        for (int p = 0; p < 3; ++p) {
            for (int d = 0; d < 8; ++d) coeffs[p * 8 + d] = 0.1 * (p + 1) - 0.03 * d;
        }
    }
    kernels::PiecewisePolyView view() const { return {breaks.data(), coeffs.data(), 3, 8}; }
};

}  // namespace

TEST_CASE("scalar reference is always available") {
    CHECK(kernels::scalar_ops().name == "scalar");
    CHECK(!kernels::active().name.empty());
}

TEST_CASE("simd variants are bit-exact equal to the scalar reference") {
    std::vector<const kernels::Ops*> variants;
    if (kernels::avx2_ops()) variants.push_back(kernels::avx2_ops());
    if (kernels::neon_ops()) variants.push_back(kernels::neon_ops());
    if (variants.empty()) return;  // nothing beyond scalar on this machine

    std::mt19937_64 rng(42);
    const TestPoly poly;
    const auto& ref = kernels::scalar_ops();
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 64u, 65u, 1000u}) {
        const auto x = random_vec(rng, n, -5.0, 5.0);
        const auto y = random_vec(rng, n, -2.0, 2.0);
        const auto z = random_vec(rng, n, -1.0, 1.0);
        std::vector<double> out_ref(n), out_var(n);
        for (const auto* ops : variants) {
            CAPTURE(ops->name);
            CAPTURE(n);

            ref.fused_update(x.data(), y.data(), z.data(), 2e-4, 0.37, out_ref.data(), n);
            ops->fused_update(x.data(), y.data(), z.data(), 2e-4, 0.37, out_var.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_var.data(), n * sizeof(double)) == 0);

            ref.drift_update(x.data(), y.data(), 2e-4, out_ref.data(), n);
            ops->drift_update(x.data(), y.data(), 2e-4, out_var.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_var.data(), n * sizeof(double)) == 0);

            ref.piecewise_poly_eval(poly.view(), x.data(), out_ref.data(), n);
            ops->piecewise_poly_eval(poly.view(), x.data(), out_var.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_var.data(), n * sizeof(double)) == 0);

            CHECK(ref.sum(x.data(), n) == ops->sum(x.data(), n));
            CHECK(ref.dot(x.data(), y.data(), n) == ops->dot(x.data(), y.data(), n));
            CHECK(ref.sum_sq_diff(x.data(), y.data(), n) == ops->sum_sq_diff(x.data(), y.data(), n));
        }
    }
}

TEST_CASE("piecewise evaluation handles breakpoints and the outside") {
    const TestPoly poly;
    const auto view = poly.view();
    // Exactly at breakpoints: piece selection is half-open, last piece closed.
    const std::vector<double> xs{-4.0, -3.5, -3.25, 0.0, 3.25, 3.4999, 3.5, 3.5000001, 100.0};
    std::vector<double> out(xs.size());
    kernels::scalar_ops().piecewise_poly_eval(view, xs.data(), out.data(), xs.size());
    CHECK(out[0] == 0.0);       // left of support
    CHECK(out.back() == 0.0);   // right of support
    CHECK(out[7] == 0.0);       // just outside
    CHECK(out[6] == 0.0);       // the support is half-open on the right
    // Inside values match direct Horner.
    auto direct = [&](double x, int piece) {
        const double t = x - poly.breaks[piece];
        double v = poly.coeffs[piece * 8 + 7];
        for (int d = 6; d >= 0; --d) v = v * t + poly.coeffs[piece * 8 + d];
        return v;
    };
    CHECK(out[1] == direct(-3.5, 0));
    CHECK(out[2] == direct(-3.25, 1));  // boundary belongs to the right piece
    CHECK(out[3] == direct(0.0, 1));
    CHECK(out[4] == direct(3.25, 2));
}

TEST_CASE("blocked reductions match plain summation closely") {
    std::mt19937_64 rng(7);
    const auto x = random_vec(rng, 1001, -1.0, 1.0);
    double plain = 0.0;
    for (double v : x) plain += v;
    CHECK(kernels::sum(x.data(), x.size()) == doctest::Approx(plain).epsilon(1e-12));
}
