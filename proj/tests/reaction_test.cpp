#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include <nlohmann/json.hpp>

#include "spdebayes/errors.hpp"
#include "spdebayes/reaction.hpp"
#include "spdebayes/wavelet.hpp"

using namespace spdebayes;

namespace {

// Exact derivative of a local-coordinate polynomial piece.
double piece_derivative(const PiecewisePoly& poly, int piece, double t, int order) {
    double v = 0.0;
    for (int d = poly.stride - 1; d >= order; --d) {
        double factor = 1.0;
        for (int q = 0; q < order; ++q) factor *= static_cast<double>(d - q);
        v = v * t + factor * poly.coeffs[piece * poly.stride + d];
    }
    return v;
}

}  // namespace

TEST_CASE("eval_reaction basics") {
    CHECK(ReactionModel::zero().eval(1.7) == 0.0);
    CHECK(ReactionModel::constant(-2.0).eval(100.0) == -2.0);

    const ReactionModel f0 = allen_cahn_truncated();
    CHECK(f0.eval(1.0) == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(f0.eval(3.6) == 0.0);
    CHECK(f0.eval(-3.6) == 0.0);
    CHECK(f0.eval(0.0) == 0.0);
    CHECK(f0.eval(3.25) == doctest::Approx(-5.078125).epsilon(1e-14));
    CHECK(f0.eval(-3.25) == doctest::Approx(5.078125).epsilon(1e-14));
    // Stable states of the core polynomial.
    CHECK(f0.eval(3.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f0.eval(-3.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("allen_cahn_truncated: C^3 matching at all knots") {
    const ReactionModel model = allen_cahn_truncated();
    const PiecewisePoly& poly = *model.piecewise_poly();
    REQUIRE(poly.n_pieces() == 3);

    // Knot at -3.25: left tail end vs core start; knot at 3.25: core end vs
    // right tail start; outer knots must be flat zero.
    for (int order = 0; order <= 3; ++order) {
        const double left_tail_end = piece_derivative(poly, 0, 0.25, order);
        const double core_start = piece_derivative(poly, 1, 0.0, order);
        CHECK(left_tail_end == doctest::Approx(core_start).epsilon(1e-9));

        const double core_end = piece_derivative(poly, 1, 6.5, order);
        const double right_tail_start = piece_derivative(poly, 2, 0.0, order);
        CHECK(core_end == doctest::Approx(right_tail_start).epsilon(1e-9));

        const double scale = std::max(1.0, std::abs(core_start));
        CHECK(std::abs(piece_derivative(poly, 0, 0.0, order)) <= 1e-9 * scale);
        CHECK(std::abs(piece_derivative(poly, 2, 0.25, order)) <= 1e-9 * scale);
    }

    // Finite-difference oracle across the inner knots for f and f'.
    auto fd1 = [&](double x, double h) {
        return (model.eval(x - 2 * h) - 8 * model.eval(x - h) + 8 * model.eval(x + h) -
                model.eval(x + 2 * h)) /
               (12 * h);
    };
    for (double knot : {-3.25, 3.25}) {
        const double h = 1e-4;
        const double inner_slope = 9.0 - 3.0 * knot * knot;
        CHECK(fd1(knot, h) == doctest::Approx(inner_slope).epsilon(1e-6));
    }
    // f'(0) = 9 for the odd core.
    CHECK(fd1(0.0, 1e-5) == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("compact support") {
    const ReactionModel f0 = allen_cahn_truncated();
    for (double x : {3.5, 3.5000001, 4.0, 17.0, -3.5000001, -50.0}) {
        CHECK(f0.eval(x) == 0.0);
    }
    CHECK(f0.support().first == doctest::Approx(-3.5));
    CHECK(f0.support().second == doctest::Approx(3.5));
}

TEST_CASE("from_coefficients: identity cases and direct-sum oracle") {
    auto basis = std::make_shared<WaveletBasis>(build_haar({-3.5, 3.5}, 3));
    const std::size_t dim = basis->dim();
    REQUIRE(dim == 8);

    std::vector<double> zero(dim, 0.0);
    const ReactionModel fz = from_coefficients(basis, zero);
    CHECK(fz.eval(0.3) == 0.0);

    for (std::size_t mu : {std::size_t{0}, std::size_t{3}, std::size_t{7}}) {
        std::vector<double> e(dim, 0.0);
        e[mu] = 1.0;
        const ReactionModel fe = from_coefficients(basis, e);
        for (double x : {-3.2, -1.0, 0.1, 2.9}) {
            CHECK(fe.eval(x) == doctest::Approx(basis->eval(mu, x)).epsilon(1e-14));
        }
    }

    std::vector<double> ones(dim, 1.0);
    const ReactionModel fsum = from_coefficients(basis, ones);
    for (double x : {-3.0, 0.7, 3.2}) {
        double direct = 0.0;
        for (std::size_t mu = 0; mu < dim; ++mu) direct += basis->eval(mu, x);
        CHECK(fsum.eval(x) == doctest::Approx(direct).epsilon(1e-13));
    }
    CHECK(fsum.eval(3.6) == 0.0);

    CHECK_THROWS_AS(from_coefficients(basis, std::vector<double>(dim + 1, 0.0)), ConfigError);
}

TEST_CASE("linearity of coefficient models") {
    auto basis = std::make_shared<WaveletBasis>(build_haar({-3.5, 3.5}, 4));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> u(basis->dim()), v(basis->dim()), w(basis->dim());
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        u[i] = dist(rng);
        v[i] = dist(rng);
        w[i] = 2.0 * u[i] - 0.5 * v[i];
    }
    const ReactionModel fu = from_coefficients(basis, u);
    const ReactionModel fv = from_coefficients(basis, v);
    const ReactionModel fw = from_coefficients(basis, w);
    for (double x = -3.45; x < 3.5; x += 0.111) {
        CHECK(fw.eval(x) ==
              doctest::Approx(2.0 * fu.eval(x) - 0.5 * fv.eval(x)).epsilon(1e-12));
    }
}

TEST_CASE("lipschitz_constant") {
    CHECK(lipschitz_constant(ReactionModel::zero(), 1e-4) == 0.0);
    CHECK(lipschitz_constant(ReactionModel::constant(-3.0), 1e-4) == 3.0);

    const ReactionModel f0 = allen_cahn_truncated();
    const double lip = lipschitz_constant(f0, 1e-4);
    // Dense numerical maximization of |f0'| plus sup |f0|.
    double max_slope = 0.0, sup = 0.0;
    const double h = 1e-5;
    for (double x = -3.6; x <= 3.6; x += h) {
        max_slope = std::max(max_slope, std::abs(f0.eval(x + h) - f0.eval(x)) / h);
        sup = std::max(sup, std::abs(f0.eval(x)));
    }
    CHECK(lip == doctest::Approx(max_slope + sup).epsilon(1e-3));
    CHECK(sup == doctest::Approx(10.3923).epsilon(1e-3));  // 6 sqrt(3) at x = sqrt(3)
}

TEST_CASE("model config blocks round-trip") {
    const ReactionModel f0 = allen_cahn_truncated();
    const ReactionModel f0_rt = model_from_json(model_to_json(f0));
    CHECK(model_to_json(f0_rt) == model_to_json(f0));
    for (double x = -4.0; x <= 4.0; x += 0.37) CHECK(f0_rt.eval(x) == f0.eval(x));

    const ReactionModel c = ReactionModel::constant(0.125);
    CHECK(model_from_json(model_to_json(c)).eval(9.0) == 0.125);

    auto basis = std::make_shared<WaveletBasis>(build_haar({-3.5, 3.5}, 2));
    std::vector<double> coeffs{0.5, -0.25, 1.0, 0.75};
    const ReactionModel fe = from_coefficients(basis, coeffs);
    const ReactionModel fe_rt = model_from_json(model_to_json(fe));
    for (double x = -3.4; x <= 3.4; x += 0.21) {
        CHECK(fe_rt.eval(x) == doctest::Approx(fe.eval(x)).epsilon(1e-15));
    }

    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"kind", "mystery"}}), ConfigError);
}
