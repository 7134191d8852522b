#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spdebayes {

// Uniform cell-centered grid on Lambda = lambda * unit_interval with
// n = round(lambda * points_per_unit) cells of width dy = lambda / n.
struct SpatialGrid {
    double lambda = 1.0;
    std::pair<double, double> unit_interval{-0.5, 0.5};
    int points_per_unit = 16;
    std::size_t n = 0;
    double dy = 0.0;

    // Cell center i in physical coordinates.
    double node(std::size_t i) const {
        return lambda * unit_interval.first + (static_cast<double>(i) + 0.5) * dy;
    }
    // Cell center i mapped onto the unit interval (y / lambda).
    double unit_node(std::size_t i) const { return node(i) / lambda; }

    friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;
};

SpatialGrid make_grid(double lambda, std::pair<double, double> unit_interval,
                      int points_per_unit);

struct Field {
    SpatialGrid grid;
    std::vector<double> values;
};

// Second-difference Neumann stencil with mirror ghost cells:
// (u[i-1] - 2u[i] + u[i+1]) / dy^2, u[-1] := u[0], u[n] := u[n-1].
void neumann_laplacian_apply(std::span<const double> u, double dy, std::span<double> out);
Field neumann_laplacian_apply(const Field& u);

// Prefactored Thomas solve of (I - dt * Lap_h) u = rhs. The matrix is
// symmetric positive definite for dt > 0, so elimination never pivots.
class HeatSolver {
public:
    HeatSolver(const SpatialGrid& grid, double dt);

    void solve(std::span<const double> rhs, std::span<double> out) const;
    void solve_inplace(std::span<double> rhs_to_solution) const;

    double dt() const { return dt_; }

private:
    double dt_;
    double r_;                     // dt / dy^2
    std::vector<double> c_prime_;  // normalized superdiagonal from forward sweep
    std::vector<double> inv_diag_;
};

Field implicit_heat_solve(const Field& rhs, double dt);

// Simulated observation X^lambda on [0,T] x Lambda; frames row-major,
// frame m at values [m*n, (m+1)*n).
struct SpaceTimePath {
    SpatialGrid grid;
    double T = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::vector<double> frames;                       // (n_steps+1) x n
    std::optional<std::vector<double>> noise_record;  // n_steps x n standardized increments
    // Rescaling metadata (eq. Y = X(lambda * .)): identity for raw paths.
    double nu = 1.0;
    double sigma = 1.0;

    std::span<const double> frame(std::size_t m) const {
        return {frames.data() + m * grid.n, grid.n};
    }
    std::span<double> frame(std::size_t m) {
        return {frames.data() + m * grid.n, grid.n};
    }
};

// Y_t(y) = X_t(lambda * y) on the unit-domain grid (same nodes, rescaled
// coordinates); records known diffusivity nu = lambda^-2 and noise level
// sigma = lambda^-1/2.
SpaceTimePath rescale_to_unit_domain(const SpaceTimePath& path);

// "SPDE1" binary path format (little-endian): magic, u32 version, f64 lambda,
// f64 T, f64 dt, u64 n, u64 n_steps, u8 has_noise_record, frames row-major
// f64, optional noise record row-major f64.
void write_path(const SpaceTimePath& path, std::ostream& out);
void write_path_file(const SpaceTimePath& path, const std::string& filename);
SpaceTimePath read_path(std::istream& in);
SpaceTimePath read_path_file(const std::string& filename);

}  // namespace spdebayes
