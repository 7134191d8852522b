#include "spdebayes/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

#include "spdebayes/errors.hpp"
#include "spdebayes/kernels.hpp"

namespace spdebayes {

double hellinger_sq(const SpaceTimePath& path, const ReactionModel& f, const ReactionModel& g) {
    const std::size_t n = path.grid.n;
    std::vector<double> fv(n), gv(n);
    double acc = 0.0;
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        const auto frame = path.frame(m);
        f.eval_field(frame, fv);
        g.eval_field(frame, gv);
        acc += kernels::sum_sq_diff(fv.data(), gv.data(), n);
    }
    return acc * path.grid.dy * path.dt / path.grid.lambda;
}

double spatial_average(const SpaceTimePath& path, const std::function<double(double)>& g) {
    double acc = 0.0;
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        const auto frame = path.frame(m);
        double frame_acc = 0.0;
        for (double x : frame) frame_acc += g(x);
        acc += frame_acc;
    }
    return acc * path.grid.dy * path.dt / path.grid.lambda;
}

void SpatialAverageObserver::on_begin(const SimConfig& cfg) {
    dy_ = cfg.grid.dy;
    dt_ = cfg.dt;
    last_ = std::min(last_, cfg.grid.n);
    first_ = std::min(first_, last_);
    n_tracked_ = last_ - first_;
    acc_ = 0.0;
}

void SpatialAverageObserver::on_step(std::size_t /*step*/, std::span<const double> x_prev,
                                     std::span<const double> /*x_next*/,
                                     std::span<const double> /*xi*/) {
    double frame_acc = 0.0;
    for (std::size_t i = first_; i < last_; ++i) frame_acc += g_(x_prev[i]);
    acc_ += frame_acc;
}

double SpatialAverageObserver::value() const {
    const double width = static_cast<double>(n_tracked_) * dy_;
    return acc_ * dy_ * dt_ / width;
}

HistogramAccumulator::HistogramAccumulator(double lo, double bin_width, std::size_t n_bins)
    : lo_(lo), bin_width_(bin_width), inv_width_(1.0 / bin_width), counts_(n_bins, 0) {}

void HistogramAccumulator::on_begin(const SimConfig& /*cfg*/) {}

void HistogramAccumulator::consume_frame(std::span<const double> frame) {
    const double lo = lo_;
    const double inv = inv_width_;
    const auto n_bins = static_cast<double>(counts_.size());
    for (double x : frame) {
        const double pos = (x - lo) * inv;
        if (pos >= 0.0 && pos < n_bins) {
            ++counts_[static_cast<std::size_t>(pos)];
        }
    }
    total_samples_ += frame.size();
}

void HistogramAccumulator::on_step(std::size_t /*step*/, std::span<const double> x_prev,
                                   std::span<const double> /*x_next*/,
                                   std::span<const double> /*xi*/) {
    consume_frame(x_prev);
}

std::uint64_t HistogramAccumulator::total_in_range() const {
    std::uint64_t total = 0;
    for (std::uint64_t c : counts_) total += c;
    return total;
}

void HistogramAccumulator::merge(const HistogramAccumulator& other) {
    if (other.counts_.size() != counts_.size()) throw ConfigError("histogram merge: shape mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_samples_ += other.total_samples_;
}

std::vector<double> occupation_time(const SpaceTimePath& path, std::span<const double> x_grid,
                                    double half_width, double scale) {
    if (!(half_width > 0.0)) throw ConfigError("occupation_time: half_width must be positive");
    if (!std::is_sorted(x_grid.begin(), x_grid.end())) {
        throw ConfigError("occupation_time: x_grid must be ascending");
    }
    std::vector<std::uint64_t> hits(x_grid.size(), 0);
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        for (double x : path.frame(m)) {
            auto it = std::lower_bound(x_grid.begin(), x_grid.end(), x - half_width);
            for (; it != x_grid.end() && *it <= x + half_width; ++it) {
                ++hits[static_cast<std::size_t>(it - x_grid.begin())];
            }
        }
    }
    const double weight = scale * path.grid.dy * path.dt;
    std::vector<double> occupation(x_grid.size());
    for (std::size_t i = 0; i < occupation.size(); ++i) {
        occupation[i] = weight * static_cast<double>(hits[i]);
    }
    return occupation;
}

std::vector<double> occupation_from_histogram(const HistogramAccumulator& hist,
                                              std::span<const double> x_grid, double half_width,
                                              double scale, double dy, double dt,
                                              std::size_t n_replicates) {
    if (std::abs(hist.bin_width() - half_width) > 1e-12 * half_width) {
        throw ConfigError("occupation_from_histogram: bins must have width = half_width");
    }
    const double weight =
        scale * dy * dt / static_cast<double>(n_replicates ? n_replicates : 1);
    const auto& counts = hist.counts();
    std::vector<double> occupation(x_grid.size(), 0.0);
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        // [x - hw, x + hw) = the two elementary bins adjacent to x.
        const double pos = (x_grid[i] - hist.lo()) / hist.bin_width();
        const auto j = static_cast<long long>(std::llround(pos));
        if (std::abs(pos - static_cast<double>(j)) > 1e-9) {
            throw ConfigError("occupation_from_histogram: x_grid point not bin-aligned");
        }
        std::uint64_t c = 0;
        if (j - 1 >= 0 && j - 1 < static_cast<long long>(counts.size())) c += counts[j - 1];
        if (j >= 0 && j < static_cast<long long>(counts.size())) c += counts[j];
        occupation[i] = weight * static_cast<double>(c);
    }
    return occupation;
}

double DensityEstimate::value_at(double z) const {
    if (bin_centers.empty()) return 0.0;
    const double width = 2.0 * bin_halfwidth;
    const double pos = (z - (bin_centers.front() - bin_halfwidth)) / width;
    if (pos < 0.0 || pos >= static_cast<double>(values.size())) return 0.0;
    return values[static_cast<std::size_t>(pos)];
}

double DensityEstimate::min_on(double lo, double hi) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double left = bin_centers[i] - bin_halfwidth;
        const double right = bin_centers[i] + bin_halfwidth;
        if (right > lo && left < hi) best = std::min(best, values[i]);
    }
    return best;
}

double DensityEstimate::max_on(double lo, double hi) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double left = bin_centers[i] - bin_halfwidth;
        const double right = bin_centers[i] + bin_halfwidth;
        if (right > lo && left < hi) best = std::max(best, values[i]);
    }
    return best;
}

DensityEstimate density_from_histogram(const HistogramAccumulator& hist, double lambda,
                                       std::size_t n_replicates, double dy, double dt) {
    DensityEstimate est;
    const std::size_t n_bins = hist.counts().size();
    est.bin_halfwidth = hist.bin_width() / 2.0;
    est.bin_centers.resize(n_bins);
    est.values.resize(n_bins);
    const double denom = lambda * static_cast<double>(n_replicates) * hist.bin_width();
    const double weight = dy * dt / denom;
    for (std::size_t b = 0; b < n_bins; ++b) {
        est.bin_centers[b] = hist.lo() + (static_cast<double>(b) + 0.5) * hist.bin_width();
        est.values[b] = weight * static_cast<double>(hist.counts()[b]);
    }
    est.total_mass = static_cast<double>(hist.total_in_range()) * dy * dt /
                     (lambda * static_cast<double>(n_replicates));
    return est;
}

DensityEstimate density_estimate(std::span<const SpaceTimePath> paths, const BinSpec& bins) {
    if (paths.empty()) throw ConfigError("density_estimate: need at least one path");
    HistogramAccumulator hist(bins.lo, bins.width(), bins.n_bins);
    for (const SpaceTimePath& path : paths) {
        for (std::size_t m = 0; m < path.n_steps; ++m) hist.consume_frame(path.frame(m));
    }
    const SpaceTimePath& first = paths.front();
    return density_from_histogram(hist, first.grid.lambda, paths.size(), first.grid.dy, first.dt);
}

double zero_norm_sq(const std::function<double(double)>& f, const DensityEstimate& p_hat) {
    const double width = 2.0 * p_hat.bin_halfwidth;
    double acc = 0.0;
    for (std::size_t b = 0; b < p_hat.values.size(); ++b) {
        if (p_hat.values[b] == 0.0) continue;
        const double fz = f(p_hat.bin_centers[b]);
        acc += fz * fz * p_hat.values[b] * width;
    }
    return acc;
}

double zero_norm_sq(const ReactionModel& f, const DensityEstimate& p_hat) {
    return zero_norm_sq(std::function<double(double)>([&f](double x) { return f.eval(x); }),
                        p_hat);
}

namespace {

// Acklam's rational approximation of the standard normal quantile.
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p <= 0.0 || p >= 1.0) throw ConfigError("normal_quantile: p must be in (0,1)");
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double empirical_quantile(std::vector<double>& sorted, double level) {
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    if (k + 1 >= sorted.size()) return sorted.back();
    return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

}  // namespace

bool TailSummary::respects_envelope(double c) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double tail = 1.0 - levels[i];
        const double bound = (c > 0.0) ? 2.0 * std::exp(-quantiles[i] * quantiles[i] / (2.0 * c))
                                       : (quantiles[i] == 0.0 ? 2.0 : 0.0);
        if (bound < tail * (1.0 - 1e-12)) return false;
    }
    return true;
}

TailSummary concentration_summary(std::span<const double> samples, double l1_norm_g,
                                  double lambda) {
    if (samples.size() < 100) throw ConfigError("concentration_summary: need >= 100 samples");
    if (!(l1_norm_g > 0.0)) throw ConfigError("concentration_summary: ||g||_L1 must be positive");
    const double mean =
        kernels::sum(samples.data(), samples.size()) / static_cast<double>(samples.size());
    const double scale = std::sqrt(lambda) / l1_norm_g;
    std::vector<double> scaled(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        scaled[i] = std::abs(samples[i] - mean) * scale;
    }
    std::sort(scaled.begin(), scaled.end());

    TailSummary summary;
    summary.sample_count = samples.size();
    summary.levels = {0.9, 0.95, 0.99, 0.995};
    summary.quantiles.resize(summary.levels.size());
    summary.gaussian_reference.resize(summary.levels.size());
    double fitted = 0.0;
    double envelope = 0.0;
    for (std::size_t i = 0; i < summary.levels.size(); ++i) {
        const double q = empirical_quantile(scaled, summary.levels[i]);
        summary.quantiles[i] = q;
        const double z = normal_quantile((1.0 + summary.levels[i]) / 2.0);
        fitted = std::max(fitted, (q / z) * (q / z));
        envelope = std::max(envelope, q * q / (2.0 * std::log(2.0 / (1.0 - summary.levels[i]))));
    }
    summary.fitted_c = fitted;
    summary.envelope_c = envelope;
    for (std::size_t i = 0; i < summary.levels.size(); ++i) {
        summary.gaussian_reference[i] =
            std::sqrt(fitted) * normal_quantile((1.0 + summary.levels[i]) / 2.0);
    }
    return summary;
}

double ergodic_centering(const ReactionModel& f0, const std::function<double(double)>& g,
                         double chi_value, const ProxyConfig& proxy) {
    const SimConfig cfg = limit_proxy_config(f0, chi_value, proxy.proxy_lambda, proxy.overrides);
    const auto [first, last] = interior_range(cfg.grid);
    std::vector<double> values(proxy.replicates, 0.0);
    parallel_for_replicates(proxy.replicates, proxy.threads, [&](std::uint64_t rep) {
        SpatialAverageObserver obs(g, first, last);
        simulate_stream(cfg, rep, obs);
        values[rep] = obs.value();
    });
    return kernels::sum(values.data(), values.size()) / static_cast<double>(values.size());
}

}  // namespace spdebayes
