#include "doctest.h"

#include <cmath>
#include <random>

#include "spdebayes/diagnostics.hpp"
#include "spdebayes/errors.hpp"
#include "spdebayes/inference.hpp"

using namespace spdebayes;

namespace {

SpaceTimePath frozen_path(double value, double lambda, int ppu, std::size_t n_steps, double dt) {
    SpaceTimePath path;
    path.grid = make_grid(lambda, {-0.5, 0.5}, ppu);
    path.T = static_cast<double>(n_steps) * dt;
    path.dt = dt;
    path.n_steps = n_steps;
    path.frames.assign((n_steps + 1) * path.grid.n, value);
    return path;
}

SpaceTimePath sim_path(double lambda, double T, double dt, Seed128 seed) {
    SimConfig cfg;
    cfg.grid = make_grid(lambda, {-0.5, 0.5}, 16);
    cfg.T = T;
    cfg.dt = dt;
    cfg.model = allen_cahn_truncated();
    cfg.seed = seed;
    return simulate(cfg);
}

}  // namespace

TEST_CASE("hellinger_sq: trivial cases and the spatial-average identity") {
    const ReactionModel f0 = allen_cahn_truncated();
    const SpaceTimePath path = sim_path(4.0, 0.05, 1e-3, {3, 3});
    CHECK(hellinger_sq(path, f0, f0) == 0.0);

    // Frozen path: constant integrand c^2 T.
    const SpaceTimePath frozen = frozen_path(1.0, 2.0, 4, 5, 0.1);
    const ReactionModel f = ReactionModel::constant(2.0);
    const ReactionModel g = ReactionModel::constant(-0.5);
    CHECK(hellinger_sq(frozen, f, g) == doctest::Approx(2.5 * 2.5 * 0.5).epsilon(1e-12));

    // Same sum as the spatial average of (f-g)^2.
    const double via_avg = spatial_average(path, [&](double x) {
        const double d = f0.eval(x);
        return d * d;
    });
    CHECK(hellinger_sq(path, f0, ReactionModel::zero()) ==
          doctest::Approx(via_avg).epsilon(1e-12));
}

TEST_CASE("spatial_average normalization") {
    const SpaceTimePath frozen = frozen_path(0.37, 2.0, 4, 8, 0.125);
    CHECK(spatial_average(frozen, [](double) { return 1.0; }) ==
          doctest::Approx(1.0).epsilon(1e-12));  // T = 1
    CHECK(spatial_average(frozen, [](double x) { return x * x; }) ==
          doctest::Approx(0.37 * 0.37).epsilon(1e-12));
}

TEST_CASE("spatial average observer equals the path functional") {
    SimConfig cfg;
    cfg.grid = make_grid(4.0, {-0.5, 0.5}, 16);
    cfg.T = 0.05;
    cfg.dt = 1e-3;
    cfg.model = allen_cahn_truncated();
    cfg.seed = {15, 4};
    auto g = [](double x) { return std::exp(-0.5 * x * x); };
    SpatialAverageObserver obs{std::function<double(double)>(g)};
    simulate_stream(cfg, 2, obs);
    const SpaceTimePath path = simulate(cfg, 2);
    CHECK(obs.value() == doctest::Approx(spatial_average(path, g)).epsilon(1e-12));
}

TEST_CASE("occupation_time: frozen path and mass identity") {
    // Frozen at zero with the section parameters: M(0) = 2^7 * lambda * T.
    const SpaceTimePath frozen = frozen_path(0.0, 50.0, 4, 10, 0.1);
    const std::vector<double> x_grid{-0.5, 0.0, 0.5};
    const auto occ = occupation_time(frozen, x_grid);
    CHECK(occ[1] == doctest::Approx(128.0 * 50.0 * 1.0).epsilon(1e-12));
    CHECK(occ[0] == 0.0);
    CHECK(occ[2] == 0.0);

    // Vanishes beyond the path's range.
    const SpaceTimePath path = sim_path(4.0, 0.05, 1e-3, {9, 2});
    double max_abs = 0.0;
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        for (double v : path.frame(m)) max_abs = std::max(max_abs, std::abs(v));
    }
    const auto far = occupation_time(path, std::vector<double>{max_abs + 0.01});
    CHECK(far[0] == 0.0);

    // Mass identity over a tiling grid: sum M(x)/scale = lambda T within 1%.
    const double hw = 0x1p-8;
    std::vector<double> tiling;
    for (double x = -6.0; x <= 6.0 + 1e-12; x += 2.0 * hw) tiling.push_back(x);
    const auto occ_tiling = occupation_time(path, tiling, hw, 128.0);
    double mass = 0.0;
    for (double v : occ_tiling) mass += v / 128.0;
    CHECK(mass == doctest::Approx(path.grid.lambda * path.T).epsilon(0.01));
}

TEST_CASE("occupation_from_histogram matches the direct evaluation on aligned grids") {
    const SpaceTimePath path = sim_path(2.0, 0.02, 1e-3, {77, 8});
    const double hw = 0x1p-8;
    HistogramAccumulator hist(-4.0, hw, static_cast<std::size_t>(8.0 / hw));
    for (std::size_t m = 0; m < path.n_steps; ++m) hist.consume_frame(path.frame(m));

    std::vector<double> x_grid;
    for (int j = -32; j <= 32; ++j) x_grid.push_back(static_cast<double>(j) * 0x1p-7);
    const auto direct = occupation_time(path, x_grid, hw, 128.0);
    const auto from_hist =
        occupation_from_histogram(hist, x_grid, hw, 128.0, path.grid.dy, path.dt, 1);
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        CHECK(from_hist[i] == doctest::Approx(direct[i]).epsilon(1e-12));
    }
}

TEST_CASE("density_estimate: frozen point mass and mass normalization") {
    std::vector<SpaceTimePath> paths;
    paths.push_back(frozen_path(0.0, 2.0, 4, 4, 0.25));
    paths.push_back(frozen_path(0.0, 2.0, 4, 4, 0.25));
    BinSpec bins;
    const DensityEstimate est = density_estimate(paths, bins);
    CHECK(est.total_mass == doctest::Approx(1.0).epsilon(1e-12));  // T = 1
    double sum_mass = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t b = 0; b < est.values.size(); ++b) {
        sum_mass += est.values[b] * 2.0 * est.bin_halfwidth;
        if (est.values[b] > 0.0) ++nonzero;
    }
    CHECK(nonzero == 1);
    CHECK(sum_mass == doctest::Approx(est.total_mass).epsilon(1e-9));
    CHECK(est.value_at(0.0) > 0.0);
    CHECK(est.value_at(1.0) == 0.0);

    CHECK_THROWS_AS(density_estimate({}, bins), ConfigError);
}

TEST_CASE("zero_norm_sq: trivial integrals and the density sandwich") {
    DensityEstimate uniform;
    const std::size_t n_bins = 70;
    uniform.bin_halfwidth = 0.05;
    for (std::size_t b = 0; b < n_bins; ++b) {
        uniform.bin_centers.push_back(-3.5 + (static_cast<double>(b) + 0.5) * 0.1);
        uniform.values.push_back(1.0 / 7.0);  // T / |Xi| with T = 1
    }
    uniform.total_mass = 1.0;

    CHECK(zero_norm_sq(ReactionModel::zero(), uniform) == 0.0);
    CHECK(zero_norm_sq(ReactionModel::constant(1.0), uniform) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // Sandwich against the same-quadrature L2 norm.
    const SpaceTimePath path = sim_path(4.0, 0.1, 1e-3, {55, 1});
    const DensityEstimate p_hat = density_estimate(std::vector<SpaceTimePath>{path}, BinSpec{});
    const ReactionModel f0 = allen_cahn_truncated();
    const double weighted = zero_norm_sq(f0, p_hat);
    double l2 = 0.0;
    for (std::size_t b = 0; b < p_hat.values.size(); ++b) {
        const double z = p_hat.bin_centers[b];
        if (z < -3.5 || z > 3.5) continue;
        const double fz = f0.eval(z);
        l2 += fz * fz * 2.0 * p_hat.bin_halfwidth;
    }
    const double pmin = p_hat.min_on(-3.5, 3.5);
    const double pmax = p_hat.max_on(-3.5, 3.5);
    CHECK(weighted >= pmin * l2 * (1.0 - 1e-9));
    CHECK(weighted <= pmax * l2 * (1.0 + 1e-9));
}

TEST_CASE("concentration_summary") {
    // All samples equal: all scaled quantiles zero.
    std::vector<double> flat(200, 3.14);
    const TailSummary degenerate = concentration_summary(flat, 2.0, 16.0);
    for (double q : degenerate.quantiles) CHECK(q == 0.0);
    CHECK(degenerate.fitted_c == 0.0);

    // Synthetic N(0, s^2 / lambda): fitted C ~ s^2 / ||g||^2 within 30%.
    const double s = 0.8, lambda = 64.0, l1 = 1.7;
    std::mt19937_64 rng(13);
    std::normal_distribution<double> dist(0.0, s / std::sqrt(lambda));
    std::vector<double> samples(4000);
    for (double& v : samples) v = dist(rng);
    const TailSummary summary = concentration_summary(samples, l1, lambda);
    const double target = s * s / (l1 * l1);
    CHECK(summary.fitted_c == doctest::Approx(target).epsilon(0.30));
    CHECK(summary.respects_envelope(summary.fitted_c));
    CHECK(summary.envelope_c <= summary.fitted_c * 1.0001);

    // Quantiles are monotone in the level.
    for (std::size_t i = 1; i < summary.quantiles.size(); ++i) {
        CHECK(summary.quantiles[i] >= summary.quantiles[i - 1]);
    }

    CHECK_THROWS_AS(concentration_summary(std::vector<double>(10, 0.0), 1.0, 4.0), ConfigError);
}

TEST_CASE("ergodic_centering: unit test function integrates to T") {
    ProxyConfig proxy;
    proxy.proxy_lambda = 16.0;
    proxy.replicates = 2;
    proxy.overrides.T = 0.05;
    proxy.overrides.dt = 1e-3;
    proxy.threads = 2;
    const double value = ergodic_centering(allen_cahn_truncated(),
                                           [](double) { return 1.0; }, 0.0, proxy);
    CHECK(value == doctest::Approx(0.05).epsilon(1e-12));
}
