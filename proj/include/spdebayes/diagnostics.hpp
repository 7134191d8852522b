#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spdebayes/grid.hpp"
#include "spdebayes/reaction.hpp"
#include "spdebayes/sim.hpp"

namespace spdebayes {

// h_lambda(f,g)^2 = (1/lambda) sum_{m,i} (f-g)^2(X_m(y_i)) dy dt over the
// left-point frames.
double hellinger_sq(const SpaceTimePath& path, const ReactionModel& f, const ReactionModel& g);

// Sample part of the ergodic average: int_0^T (1/lambda) int g(X_t(y)) dy dt.
double spatial_average(const SpaceTimePath& path, const std::function<double(double)>& g);

// Streaming counterparts used by the studies.
class SpatialAverageObserver : public StepObserver {
public:
    explicit SpatialAverageObserver(std::function<double(double)> g,
                                    std::size_t first_cell = 0, std::size_t last_cell = SIZE_MAX)
        : g_(std::move(g)), first_(first_cell), last_(last_cell) {}
    void on_begin(const SimConfig& cfg) override;
    void on_step(std::size_t step, std::span<const double> x_prev,
                 std::span<const double> x_next, std::span<const double> xi) override;
    // (1/width) int_0^T avg g over the tracked cells; width = tracked length.
    double value() const;

private:
    std::function<double(double)> g_;
    std::size_t first_;
    std::size_t last_;
    double acc_ = 0.0;
    double dy_ = 0.0;
    double dt_ = 0.0;
    std::size_t n_tracked_ = 0;
};

// Occupation counts on half-open bins [lo + b*w, lo + (b+1)*w).
class HistogramAccumulator : public StepObserver {
public:
    HistogramAccumulator(double lo, double bin_width, std::size_t n_bins);
    void on_begin(const SimConfig& cfg) override;
    void on_step(std::size_t step, std::span<const double> x_prev,
                 std::span<const double> x_next, std::span<const double> xi) override;
    void consume_frame(std::span<const double> frame);

    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::uint64_t total_in_range() const;
    std::uint64_t total_samples() const { return total_samples_; }
    double lo() const { return lo_; }
    double bin_width() const { return bin_width_; }

    void merge(const HistogramAccumulator& other);

private:
    double lo_;
    double bin_width_;
    double inv_width_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_samples_ = 0;
};

// M(x) = scale * sum_{m,i} 1(|X_m(y_i) - x| <= half_width) dy dt per grid
// point; defaults scale = 2^7, half_width = 2^-8.
std::vector<double> occupation_time(const SpaceTimePath& path, std::span<const double> x_grid,
                                    double half_width = 0x1p-8, double scale = 128.0);

// Occupation curve from elementary-bin counts when every x_grid point is
// bin-aligned: x = lo + j*2*half_width for integer j.
std::vector<double> occupation_from_histogram(const HistogramAccumulator& hist,
                                              std::span<const double> x_grid, double half_width,
                                              double scale, double dy, double dt,
                                              std::size_t n_replicates = 1);

struct DensityEstimate {
    std::vector<double> bin_centers;
    double bin_halfwidth = 0.0;
    std::vector<double> values;
    double total_mass = 0.0;

    double value_at(double z) const;
    double min_on(double lo, double hi) const;
    double max_on(double lo, double hi) const;
};

struct BinSpec {
    double lo = -4.0;
    double hi = 4.0;
    std::size_t n_bins = 1024;  // width 2^-7 over [-4, 4]

    double width() const { return (hi - lo) / static_cast<double>(n_bins); }
};

// Pooled occupation density: p_hat(z) = occupation per unit z / (lambda *
// n_reps); integrates to ~T (up to mass outside the bin range).
DensityEstimate density_estimate(std::span<const SpaceTimePath> paths, const BinSpec& bins);
DensityEstimate density_from_histogram(const HistogramAccumulator& hist, double lambda,
                                       std::size_t n_replicates, double dy, double dt);

// ||f||_0^2 = sum_bins f(z_b)^2 p_hat(z_b) * bin_width.
double zero_norm_sq(const ReactionModel& f, const DensityEstimate& p_hat);
double zero_norm_sq(const std::function<double(double)>& f, const DensityEstimate& p_hat);

struct TailSummary {
    std::size_t sample_count = 0;
    std::vector<double> levels;              // {0.9, 0.95, 0.99, 0.995}
    std::vector<double> quantiles;           // of |sqrt(lambda) (s - mean)| / ||g||_L1
    std::vector<double> gaussian_reference;  // matched-variance Gaussian quantiles
    double fitted_c = 0.0;                   // sub-Gaussian variance proxy constant
    double envelope_c = 0.0;                 // smallest C with all quantiles inside the bound

    // 2 exp(-x^2 / (2 C)) tail envelope value at quantile level `level`.
    bool respects_envelope(double c) const;
};

// Centers the samples, scales by sqrt(lambda)/||g||_L1 and summarizes the
// tails against the sub-Gaussian bound 2 exp(-x^2/(2 C ||g||_L1^2)).
TailSummary concentration_summary(std::span<const double> samples, double l1_norm_g,
                                  double lambda);

struct ProxyConfig {
    double proxy_lambda = 64.0;
    std::size_t replicates = 64;
    ProxyOverrides overrides;
    unsigned threads = 0;
};

// Monte Carlo estimate of int_0^T E[g(Z_t(0))] dt via interior cells of the
// large-domain proxy (constant chi, so no ybar dependence).
double ergodic_centering(const ReactionModel& f0, const std::function<double(double)>& g,
                         double chi_value, const ProxyConfig& proxy);

}  // namespace spdebayes
