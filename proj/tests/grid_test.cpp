#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spdebayes/errors.hpp"
#include "spdebayes/grid.hpp"

using namespace spdebayes;

namespace {

Eigen::MatrixXd stencil_matrix(const SpatialGrid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.n);
    const double inv_dy2 = 1.0 / (grid.dy * grid.dy);
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double diag = -2.0;
        if (i == 0 || i == n - 1) diag = -1.0;  // mirror ghost cell
        lap(i, i) = diag * inv_dy2;
        if (i > 0) lap(i, i - 1) = inv_dy2;
        if (i + 1 < n) lap(i, i + 1) = inv_dy2;
    }
    return lap;
}

}  // namespace

TEST_CASE("make_grid: section 2.6 configuration and arithmetic") {
    const SpatialGrid g = make_grid(50.0, {-0.5, 0.5}, 16);
    CHECK(g.n == 800);
    CHECK(g.dy == doctest::Approx(1.0 / 16.0));
    CHECK(std::abs(g.dy * static_cast<double>(g.n) - g.lambda) <= 1e-12 * g.lambda);

    const SpatialGrid tiny = make_grid(1.0, {-0.5, 0.5}, 2);
    CHECK(tiny.n == 2);
    CHECK(tiny.dy == doctest::Approx(0.5));

    const SpatialGrid shifted = make_grid(4.0, {0.0, 1.0}, 8);
    CHECK(shifted.n == 32);
    CHECK(shifted.dy == doctest::Approx(0.125));
    CHECK(shifted.node(0) > 0.0);
    CHECK(shifted.node(31) < 4.0);

    // Fractional lambda*ppu snaps lambda onto the grid.
    const SpatialGrid frac = make_grid(12.3, {-0.5, 0.5}, 16);
    CHECK(frac.n == 197);
    CHECK(frac.lambda == doctest::Approx(197.0 / 16.0));
}

TEST_CASE("make_grid rejects invalid input") {
    CHECK_THROWS_AS(make_grid(0.5, {-0.5, 0.5}, 16), ConfigError);
    CHECK_THROWS_AS(make_grid(2.0, {-0.5, 0.4}, 16), ConfigError);
    CHECK_THROWS_AS(make_grid(2.0, {0.25, 1.25}, 16), ConfigError);
    CHECK_THROWS_AS(make_grid(2.0, {-0.5, 0.5}, 1), ConfigError);
}

TEST_CASE("neumann stencil: constants, ramps, zero row sums") {
    const SpatialGrid g = make_grid(4.0, {-0.5, 0.5}, 8);
    Field u{g, std::vector<double>(g.n, 3.7)};
    const Field lap_const = neumann_laplacian_apply(u);
    for (double v : lap_const.values) CHECK(v == 0.0);

    const double slope = 1.3;
    for (std::size_t i = 0; i < g.n; ++i) u.values[i] = slope * g.node(i);
    const Field lap_ramp = neumann_laplacian_apply(u);
    CHECK(lap_ramp.values.front() == doctest::Approx(slope / g.dy));
    CHECK(lap_ramp.values.back() == doctest::Approx(-slope / g.dy));
    for (std::size_t i = 1; i + 1 < g.n; ++i) {
        CHECK(std::abs(lap_ramp.values[i]) < 1e-10);
    }

    const Eigen::MatrixXd lap = stencil_matrix(g);
    CHECK((lap - lap.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < lap.rows(); ++i) {
        CHECK(std::abs(lap.row(i).sum()) < 1e-12 / (g.dy * g.dy));
    }
}

TEST_CASE("stencil eigenpairs match the dense oracle and the cosine modes") {
    const SpatialGrid g = make_grid(2.0, {-0.5, 0.5}, 8);  // n = 16 <= 32
    const Eigen::MatrixXd lap = stencil_matrix(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    REQUIRE(eig.info() == Eigen::Success);

    const auto n = static_cast<Eigen::Index>(g.n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd v = eig.eigenvectors().col(k);
        std::vector<double> out(g.n);
        neumann_laplacian_apply(std::span<const double>(v.data(), g.n), g.dy, out);
        for (Eigen::Index i = 0; i < n; ++i) {
            CHECK(out[i] == doctest::Approx(eig.eigenvalues()[k] * v[i]).epsilon(1e-9));
        }
    }
    // Analytic spectrum: -4 sin^2(pi k / (2n)) / dy^2 (the solver sorts
    // eigenvalues ascending, i.e. mode n-1 first).
    for (Eigen::Index k = 0; k < n; ++k) {
        const double mode = static_cast<double>(n - 1 - k);
        const double s = std::sin(std::numbers::pi * mode / (2.0 * static_cast<double>(n)));
        const double theta = -4.0 * s * s / (g.dy * g.dy);
        CHECK(eig.eigenvalues()[k] == doctest::Approx(theta).epsilon(1e-9));
    }
}

TEST_CASE("implicit heat solve: constants, eigenvectors, delta oracle") {
    const SpatialGrid g = make_grid(1.0, {-0.5, 0.5}, 8);
    const double dt = g.dy * g.dy;

    Field rhs{g, std::vector<double>(g.n, -2.5)};
    const Field u_const = implicit_heat_solve(rhs, dt);
    for (double v : u_const.values) CHECK(v == doctest::Approx(-2.5).epsilon(1e-13));

    const Eigen::MatrixXd lap = stencil_matrix(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    for (Eigen::Index k : {1, 3, 7}) {
        const Eigen::VectorXd v = eig.eigenvectors().col(k);
        Field f{g, std::vector<double>(v.data(), v.data() + g.n)};
        const Field u = implicit_heat_solve(f, dt);
        const double theta = -eig.eigenvalues()[k];
        for (std::size_t i = 0; i < g.n; ++i) {
            CHECK(u.values[i] == doctest::Approx(v[static_cast<Eigen::Index>(i)] /
                                                 (1.0 + dt * theta))
                                     .epsilon(1e-10));
        }
    }

    // Dense LU oracle for a centered delta.
    Field delta{g, std::vector<double>(g.n, 0.0)};
    delta.values[g.n / 2] = 1.0;
    const Field u_delta = implicit_heat_solve(delta, dt);
    const auto n = static_cast<Eigen::Index>(g.n);
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - dt * lap;
    Eigen::VectorXd dense = system.lu().solve(
        Eigen::Map<const Eigen::VectorXd>(delta.values.data(), n));
    for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(u_delta.values[i] == doctest::Approx(dense[static_cast<Eigen::Index>(i)])
                                       .epsilon(1e-12));
    }

    // Residual contract.
    std::vector<double> lap_u(g.n);
    neumann_laplacian_apply(u_delta.values, g.dy, lap_u);
    double resid = 0.0, rhs_max = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        resid = std::max(resid, std::abs(u_delta.values[i] - dt * lap_u[i] - delta.values[i]));
        rhs_max = std::max(rhs_max, std::abs(delta.values[i]));
    }
    CHECK(resid <= 1e-10 * rhs_max);
}

TEST_CASE("(I - dt Lap) is SPD and the solve conserves mass") {
    for (double dt : {1e-5, 1e-3, 0.1, 10.0}) {
        const SpatialGrid g = make_grid(4.0, {-0.5, 0.5}, 16);  // n = 64
        const Eigen::MatrixXd lap = stencil_matrix(g);
        const auto n = static_cast<Eigen::Index>(g.n);
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - dt * lap;
        Eigen::LLT<Eigen::MatrixXd> llt(system);
        CHECK(llt.info() == Eigen::Success);

        Field rhs{g, std::vector<double>(g.n)};
        for (std::size_t i = 0; i < g.n; ++i) {
            rhs.values[i] = std::sin(3.0 * g.node(i)) + 0.2 * g.node(i);
        }
        const Field u = implicit_heat_solve(rhs, dt);
        double mean_rhs = 0.0, mean_u = 0.0;
        for (std::size_t i = 0; i < g.n; ++i) {
            mean_rhs += rhs.values[i];
            mean_u += u.values[i];
        }
        mean_rhs /= static_cast<double>(g.n);
        mean_u /= static_cast<double>(g.n);
        CHECK(mean_u == doctest::Approx(mean_rhs).epsilon(1e-12));
    }
    CHECK_THROWS_AS(implicit_heat_solve(Field{make_grid(1, {-0.5, 0.5}, 4), {0, 0, 0, 0}}, -1.0),
                    ConfigError);
}

TEST_CASE("heat-kernel scaling: lambda-domain solve equals unit-domain solve") {
    // Deterministic evolution on (lambda=8, t) vs unit domain at lambda^-2 t.
    const double lambda = 8.0;
    const SpatialGrid big = make_grid(lambda, {-0.5, 0.5}, 16);
    SpaceTimePath path;
    path.grid = big;
    path.frames.assign(big.n, 0.0);
    for (std::size_t i = 0; i < big.n; ++i) {
        const double ybar = big.unit_node(i);
        path.frames[i] = std::exp(-8.0 * ybar * ybar) + 0.3 * std::cos(4.0 * ybar);
    }
    path.n_steps = 0;
    path.dt = 1e-3;
    path.T = 0.0;
    const SpaceTimePath unit_path = rescale_to_unit_domain(path);
    CHECK(unit_path.nu == doctest::Approx(1.0 / (lambda * lambda)));
    CHECK(unit_path.sigma == doctest::Approx(1.0 / std::sqrt(lambda)));

    const int steps = 400;
    const double dt_big = 1e-3;
    const double dt_unit = dt_big / (lambda * lambda);
    HeatSolver solver_big(big, dt_big);
    HeatSolver solver_unit(unit_path.grid, dt_unit);
    std::vector<double> u_big = path.frames;
    std::vector<double> u_unit = unit_path.frames;
    for (int s = 0; s < steps; ++s) {
        solver_big.solve_inplace(u_big);
        solver_unit.solve_inplace(u_unit);
    }
    double sup = 0.0;
    for (std::size_t i = 0; i < big.n; ++i) {
        sup = std::max(sup, std::abs(u_big[i] - u_unit[i]));
    }
    CHECK(sup < 1e-6);
}

TEST_CASE("SPDE1 round-trip") {
    SpaceTimePath path;
    path.grid = make_grid(2.0, {-0.5, 0.5}, 4);
    path.T = 0.5;
    path.dt = 0.25;
    path.n_steps = 2;
    path.frames.resize(3 * path.grid.n);
    for (std::size_t i = 0; i < path.frames.size(); ++i) {
        path.frames[i] = 0.1 * static_cast<double>(i) - 1.0;
    }
    path.noise_record.emplace(2 * path.grid.n, 0.5);

    std::stringstream buffer;
    write_path(path, buffer);
    const SpaceTimePath copy = read_path(buffer);
    CHECK(copy.grid.lambda == path.grid.lambda);
    CHECK(copy.grid.n == path.grid.n);
    CHECK(copy.T == path.T);
    CHECK(copy.dt == path.dt);
    CHECK(copy.frames == path.frames);
    REQUIRE(copy.noise_record.has_value());
    CHECK(*copy.noise_record == *path.noise_record);

    std::stringstream bad("not a path");
    CHECK_THROWS_AS(read_path(bad), ConfigError);
}
