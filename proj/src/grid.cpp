#include "spdebayes/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "spdebayes/errors.hpp"

namespace spdebayes {

static_assert(std::endian::native == std::endian::little,
              "SPDE1 I/O assumes a little-endian host");

SpatialGrid make_grid(double lambda, std::pair<double, double> unit_interval,
                      int points_per_unit) {
    if (!(lambda >= 1.0) || !std::isfinite(lambda)) {
        throw ConfigError("make_grid: lambda must be finite and >= 1");
    }
    const double length = unit_interval.second - unit_interval.first;
    if (std::abs(length - 1.0) > 1e-12) {
        throw ConfigError("make_grid: unit interval must have length 1");
    }
    if (unit_interval.first > 0.0 || unit_interval.second < 0.0) {
        throw ConfigError("make_grid: unit interval must contain 0");
    }
    if (points_per_unit < 2) {
        throw ConfigError("make_grid: points_per_unit must be >= 2");
    }

    SpatialGrid grid;
    grid.unit_interval = unit_interval;
    grid.points_per_unit = points_per_unit;
    const double target = lambda * points_per_unit;
    const auto n = static_cast<std::size_t>(std::llround(target));
    if (n < 2) throw ConfigError("make_grid: grid would have fewer than 2 cells");
    grid.n = n;
    if (std::abs(target - static_cast<double>(n)) > 1e-9 * target) {
        // Fractional lambda*ppu: snap lambda onto the grid.
        grid.lambda = static_cast<double>(n) / points_per_unit;
    } else {
        grid.lambda = lambda;
    }
    grid.dy = grid.lambda / static_cast<double>(n);
    return grid;
}

void neumann_laplacian_apply(std::span<const double> u, double dy, std::span<double> out) {
    const std::size_t n = u.size();
    const double inv_dy2 = 1.0 / (dy * dy);
    if (n == 1) {
        out[0] = 0.0;
        return;
    }
    out[0] = (u[1] - u[0]) * inv_dy2;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dy2;
    }
    out[n - 1] = (u[n - 2] - u[n - 1]) * inv_dy2;
}

Field neumann_laplacian_apply(const Field& u) {
    Field result{u.grid, std::vector<double>(u.values.size())};
    neumann_laplacian_apply(u.values, u.grid.dy, result.values);
    return result;
}

HeatSolver::HeatSolver(const SpatialGrid& grid, double dt) : dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("HeatSolver: dt must be positive and finite");
    }
    const std::size_t n = grid.n;
    r_ = dt / (grid.dy * grid.dy);
    c_prime_.resize(n);
    inv_diag_.resize(n);
    double m = 1.0 + r_;  // first row of I - dt*Lap_h under mirror ghosts
    inv_diag_[0] = 1.0 / m;
    for (std::size_t i = 1; i < n; ++i) {
        const double b = (i + 1 < n) ? 1.0 + 2.0 * r_ : 1.0 + r_;
        c_prime_[i - 1] = r_ * inv_diag_[i - 1];
        m = b - r_ * c_prime_[i - 1];
        inv_diag_[i] = 1.0 / m;
    }
    c_prime_[n - 1] = 0.0;
}

void HeatSolver::solve_inplace(std::span<double> x) const {
    const std::size_t n = x.size();
    x[0] = x[0] * inv_diag_[0];
    for (std::size_t i = 1; i < n; ++i) {
        x[i] = (x[i] + r_ * x[i - 1]) * inv_diag_[i];
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] += c_prime_[i] * x[i + 1];
    }
}

void HeatSolver::solve(std::span<const double> rhs, std::span<double> out) const {
    std::memcpy(out.data(), rhs.data(), rhs.size() * sizeof(double));
    solve_inplace(out);
}

Field implicit_heat_solve(const Field& rhs, double dt) {
    HeatSolver solver(rhs.grid, dt);
    Field u{rhs.grid, std::vector<double>(rhs.values.size())};
    solver.solve(rhs.values, u.values);
    return u;
}

SpaceTimePath rescale_to_unit_domain(const SpaceTimePath& path) {
    SpaceTimePath out = path;
    const double lambda = path.grid.lambda;
    out.grid.lambda = 1.0;
    out.grid.points_per_unit = static_cast<int>(path.grid.n);
    out.grid.dy = 1.0 / static_cast<double>(path.grid.n);
    out.nu = 1.0 / (lambda * lambda);
    out.sigma = 1.0 / std::sqrt(lambda);
    return out;
}

namespace {

constexpr char kMagic[5] = {'S', 'P', 'D', 'E', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ConfigError("SPDE1: truncated stream");
    return value;
}

}  // namespace

void write_path(const SpaceTimePath& path, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    write_raw(out, kVersion);
    write_raw(out, path.grid.lambda);
    write_raw(out, path.T);
    write_raw(out, path.dt);
    write_raw(out, static_cast<std::uint64_t>(path.grid.n));
    write_raw(out, static_cast<std::uint64_t>(path.n_steps));
    const std::uint8_t has_noise = path.noise_record.has_value() ? 1 : 0;
    write_raw(out, has_noise);
    out.write(reinterpret_cast<const char*>(path.frames.data()),
              static_cast<std::streamsize>(path.frames.size() * sizeof(double)));
    if (path.noise_record) {
        out.write(reinterpret_cast<const char*>(path.noise_record->data()),
                  static_cast<std::streamsize>(path.noise_record->size() * sizeof(double)));
    }
    if (!out) throw ConfigError("SPDE1: write failed");
}

void write_path_file(const SpaceTimePath& path, const std::string& filename) {
    std::ofstream out(filename, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + filename);
    write_path(path, out);
}

SpaceTimePath read_path(std::istream& in) {
    char magic[5];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ConfigError("SPDE1: bad magic");
    }
    const auto version = read_raw<std::uint32_t>(in);
    if (version != kVersion) throw ConfigError("SPDE1: unsupported version");

    SpaceTimePath path;
    const double lambda = read_raw<double>(in);
    path.T = read_raw<double>(in);
    path.dt = read_raw<double>(in);
    const auto n = read_raw<std::uint64_t>(in);
    const auto n_steps = read_raw<std::uint64_t>(in);
    const auto has_noise = read_raw<std::uint8_t>(in);
    if (n < 2 || n > (1ull << 32) || n_steps > (1ull << 32)) {
        throw ConfigError("SPDE1: implausible dimensions");
    }
    path.grid.lambda = lambda;
    path.grid.unit_interval = {-0.5, 0.5};
    path.grid.n = n;
    path.grid.dy = lambda / static_cast<double>(n);
    path.grid.points_per_unit =
        static_cast<int>(std::llround(static_cast<double>(n) / lambda));
    path.n_steps = n_steps;
    path.frames.resize((n_steps + 1) * n);
    in.read(reinterpret_cast<char*>(path.frames.data()),
            static_cast<std::streamsize>(path.frames.size() * sizeof(double)));
    if (!in) throw ConfigError("SPDE1: truncated frames");
    if (has_noise) {
        path.noise_record.emplace(n_steps * n);
        in.read(reinterpret_cast<char*>(path.noise_record->data()),
                static_cast<std::streamsize>(path.noise_record->size() * sizeof(double)));
        if (!in) throw ConfigError("SPDE1: truncated noise record");
    }
    return path;
}

SpaceTimePath read_path_file(const std::string& filename) {
    std::ifstream in(filename, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + filename);
    return read_path(in);
}

}  // namespace spdebayes
