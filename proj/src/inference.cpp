#include "spdebayes/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spdebayes/errors.hpp"

namespace spdebayes {

using MatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

StatsAccumulator::StatsAccumulator(const WaveletBasis& basis, const SpatialGrid& grid,
                                   double dt, const ReactionModel* f0)
    : basis_(basis),
      f0_(f0),
      grid_(grid),
      dt_(dt),
      dim_(basis.dim()),
      G_(dim_ * dim_, 0.0),
      a_(dim_, 0.0),
      b_(f0 ? dim_ : 0, 0.0),
      lap_(grid.n),
      f0_vals_(f0 ? grid.n : 0),
      idx_(basis.max_active()),
      val_(basis.max_active()) {}

void StatsAccumulator::consume(std::span<const double> x_prev, std::span<const double> x_next) {
    const std::size_t n = grid_.n;
    const double dy = grid_.dy;
    const double dtdy = dt_ * dy;
    neumann_laplacian_apply(x_prev, grid_.dy, lap_);
    if (f0_) f0_->eval_field(x_prev, f0_vals_);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = x_prev[i];
        const double increment = x_next[i] - x - dt_ * lap_[i];
        if (f0_) {
            const double f0x = f0_vals_[i];
            s0_ += f0x * increment * dy;
            q0_ += f0x * f0x * dtdy;
        }
        const std::size_t count = basis_.sparse_eval(x, idx_.data(), val_.data());
        if (count == 0) continue;
        const double w_inc = increment * dy;
        for (std::size_t r = 0; r < count; ++r) {
            const double vr = val_[r];
            a_[idx_[r]] += vr * w_inc;
            if (f0_) b_[idx_[r]] += vr * f0_vals_[i] * dtdy;
            const double vr_dtdy = vr * dtdy;
            double* grow = G_.data() + idx_[r] * dim_;
            for (std::size_t c = 0; c < count; ++c) {
                grow[idx_[c]] += vr_dtdy * val_[c];
            }
        }
    }
    ++samples_;
    if (!std::isfinite(s0_) || !std::isfinite(a_[0])) {
        throw NumericalError("accumulate_stats: non-finite accumulation at step " +
                             std::to_string(samples_));
    }
}

void StatsAccumulator::on_step(std::size_t /*step*/, std::span<const double> x_prev,
                               std::span<const double> x_next, std::span<const double> /*xi*/) {
    consume(x_prev, x_next);
}

SufficientStats StatsAccumulator::take_stats() {
    SufficientStats stats;
    stats.dim = dim_;
    stats.lambda = grid_.lambda;
    stats.T = static_cast<double>(samples_) * dt_;
    stats.G = std::move(G_);
    stats.a = std::move(a_);
    return stats;
}

SufficientStats accumulate_stats(const SpaceTimePath& path, const WaveletBasis& basis) {
    StatsAccumulator acc(basis, path.grid, path.dt);
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        acc.consume(path.frame(m), path.frame(m + 1));
    }
    return acc.take_stats();
}

double log_likelihood(const SufficientStats& stats, std::span<const double> coeffs) {
    if (coeffs.size() != stats.dim) throw ConfigError("log_likelihood: dimension mismatch");
    ConstVectorMap f(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    ConstVectorMap a(stats.a.data(), static_cast<Eigen::Index>(stats.dim));
    ConstMatrixMap G(stats.G.data(), static_cast<Eigen::Index>(stats.dim),
                     static_cast<Eigen::Index>(stats.dim));
    return a.dot(f) - 0.5 * f.dot(G * f);
}

nlohmann::json PosteriorGaussian::basis_descriptor() const {
    return nlohmann::json::parse(basis_descriptor_text);
}

double PosteriorGaussian::pointwise_sd(std::span<const double> psi) const {
    // Psi^T Q Psi = ||L^T Psi||^2.
    double total = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        double dot = 0.0;
        for (std::size_t r = c; r < dim; ++r) {
            dot += cov_factor[r * dim + c] * psi[r];
        }
        total += dot * dot;
    }
    return std::sqrt(total);
}

PosteriorGaussian posterior(const SufficientStats& stats, const PriorSpec& prior,
                            const WaveletBasis& basis) {
    const auto dim = static_cast<Eigen::Index>(stats.dim);
    if (prior.variances.size() != stats.dim || basis.dim() != stats.dim) {
        throw ConfigError("posterior: dimension mismatch between stats, prior and basis");
    }
    for (double v : prior.variances) {
        if (!(v > 0.0)) throw ConfigError("posterior: prior variances must be positive");
    }
    ConstMatrixMap G(stats.G.data(), dim, dim);
    if (!G.allFinite()) throw NumericalError("posterior: non-finite Gram matrix");

    Eigen::MatrixXd precision = G.selfadjointView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < dim; ++i) precision(i, i) += 1.0 / prior.variances[i];

    const double trace_scale = precision.trace() / static_cast<double>(dim);
    const double jitters[] = {0.0, 1e-12 * trace_scale, 1e-10 * trace_scale};
    Eigen::LLT<Eigen::MatrixXd> llt;
    double used = 0.0;
    bool ok = false;
    for (double jitter : jitters) {
        Eigen::MatrixXd attempt = precision;
        if (jitter > 0.0) attempt.diagonal().array() += jitter;
        llt.compute(attempt);
        if (llt.info() == Eigen::Success) {
            used = jitter;
            ok = true;
            break;
        }
    }
    if (!ok) throw NumericalError("posterior: Cholesky factorization failed");

    PosteriorGaussian post;
    post.dim = stats.dim;
    post.prior = prior;
    post.jitter_used = used;
    post.basis_descriptor_text = basis_to_json(basis).dump();

    ConstVectorMap a(stats.a.data(), dim);
    Eigen::VectorXd mu = llt.solve(a);
    post.mean.assign(mu.data(), mu.data() + dim);

    // Q = (G + Sigma^-1)^-1 explicitly, then its own Cholesky factor.
    Eigen::MatrixXd q = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    Eigen::LLT<Eigen::MatrixXd> qllt(q);
    if (qllt.info() != Eigen::Success) {
        // Symmetrize and retry once; Q is PD in exact arithmetic.
        Eigen::MatrixXd qs = 0.5 * (q + q.transpose());
        qllt.compute(qs);
        if (qllt.info() != Eigen::Success) {
            throw NumericalError("posterior: covariance factorization failed");
        }
    }
    Eigen::MatrixXd l = qllt.matrixL();
    post.cov_factor.resize(stats.dim * stats.dim, 0.0);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c <= r; ++c) {
            post.cov_factor[static_cast<std::size_t>(r) * stats.dim + c] = l(r, c);
        }
    }
    const auto& pl = llt.matrixLLT();
    double dmin = pl(0, 0), dmax = pl(0, 0);
    for (Eigen::Index i = 1; i < dim; ++i) {
        dmin = std::min(dmin, pl(i, i));
        dmax = std::max(dmax, pl(i, i));
    }
    post.condition_estimate = (dmin > 0.0) ? (dmax / dmin) * (dmax / dmin) : 0.0;

    // MAP optimality: the gradient residual must vanish.
    const Eigen::VectorXd residual = a - precision * mu;
    const double tol = 1e-8 * std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    if (residual.cwiseAbs().maxCoeff() > tol) {
        Eigen::VectorXd refined = mu + llt.solve(residual);
        const Eigen::VectorXd residual2 = a - precision * refined;
        if (residual2.cwiseAbs().maxCoeff() > tol) {
            throw NumericalError("posterior: normal equations solved inaccurately");
        }
        post.mean.assign(refined.data(), refined.data() + dim);
    }
    return post;
}

std::vector<double> sample_posterior(const PosteriorGaussian& post, std::size_t n, Seed128 seed) {
    if (n < 1) throw ConfigError("sample_posterior: n must be >= 1");
    const std::size_t dim = post.dim;
    std::vector<double> draws(n * dim);
    std::vector<double> z(dim);
    NoiseStream stream(seed, NoiseStream::Purpose::PosteriorDraws, 0);
    for (std::size_t d = 0; d < n; ++d) {
        stream.fill_normals(d, z.data(), dim);
        double* row = draws.data() + d * dim;
        for (std::size_t r = 0; r < dim; ++r) {
            double v = post.mean[r];
            const double* lrow = post.cov_factor.data() + r * dim;
            for (std::size_t c = 0; c <= r; ++c) v += lrow[c] * z[c];
            row[r] = v;
        }
    }
    return draws;
}

CredibleBand credible_band(const PosteriorGaussian& post, const WaveletBasis& basis,
                           std::span<const double> x_grid, double level,
                           std::size_t n_draws, Seed128 seed) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible_band: level must be in (0,1)");
    const std::size_t dim = post.dim;
    if (basis.dim() != dim) throw ConfigError("credible_band: basis dimension mismatch");
    const std::vector<double> draws = sample_posterior(post, n_draws, seed);

    CredibleBand band;
    band.x.assign(x_grid.begin(), x_grid.end());
    band.lower.resize(x_grid.size());
    band.median.resize(x_grid.size());
    band.upper.resize(x_grid.size());
    band.sd_analytic.resize(x_grid.size());

    std::vector<double> psi(dim);
    std::vector<double> values(n_draws);
    const double alpha = (1.0 - level) / 2.0;
    for (std::size_t xi = 0; xi < x_grid.size(); ++xi) {
        basis.eval_all(x_grid[xi], psi);
        for (std::size_t d = 0; d < n_draws; ++d) {
            const double* row = draws.data() + d * dim;
            double v = 0.0;
            for (std::size_t c = 0; c < dim; ++c) v += row[c] * psi[c];
            values[d] = v;
        }
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(n_draws - 1);
            const auto k = static_cast<std::size_t>(pos);
            std::nth_element(values.begin(), values.begin() + k, values.end());
            const double vk = values[k];
            if (k + 1 >= n_draws) return vk;
            const double frac = pos - static_cast<double>(k);
            if (frac == 0.0) return vk;
            std::nth_element(values.begin(), values.begin() + k + 1, values.end());
            return vk + frac * (values[k + 1] - vk);
        };
        band.lower[xi] = quantile(alpha);
        band.median[xi] = quantile(0.5);
        band.upper[xi] = quantile(1.0 - alpha);
        band.sd_analytic[xi] = post.pointwise_sd(psi);
    }
    return band;
}

GirsanovContext make_girsanov_context(const SpaceTimePath& path, const WaveletBasis& basis,
                                      const ReactionModel& f0) {
    StatsAccumulator acc(basis, path.grid, path.dt, &f0);
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        acc.consume(path.frame(m), path.frame(m + 1));
    }
    GirsanovContext ctx;
    ctx.b = acc.cross_b();
    ctx.s0 = acc.cross_s0();
    ctx.q0 = acc.cross_q0();
    ctx.lambda = path.grid.lambda;
    return ctx;
}

GirsanovTerms girsanov_from_context(const SufficientStats& stats, const GirsanovContext& ctx,
                                    std::span<const double> f_coeffs) {
    if (f_coeffs.size() != stats.dim) throw ConfigError("girsanov: dimension mismatch");
    ConstVectorMap f(f_coeffs.data(), static_cast<Eigen::Index>(stats.dim));
    ConstVectorMap a(stats.a.data(), static_cast<Eigen::Index>(stats.dim));
    ConstVectorMap b(ctx.b.data(), static_cast<Eigen::Index>(stats.dim));
    ConstMatrixMap G(stats.G.data(), static_cast<Eigen::Index>(stats.dim),
                     static_cast<Eigen::Index>(stats.dim));
    const double lambda = ctx.lambda;
    const double fGf = f.dot(G * f);
    GirsanovTerms terms;
    terms.loglik_diff = (a.dot(f) - 0.5 * fGf) - (ctx.s0 - 0.5 * ctx.q0);
    terms.martingale_term = ((a.dot(f) - f.dot(b)) - (ctx.s0 - ctx.q0)) / std::sqrt(lambda);
    terms.hellinger_sq = (fGf - 2.0 * f.dot(b) + ctx.q0) / lambda;
    return terms;
}

GirsanovTerms girsanov_decomposition(const SpaceTimePath& path, const WaveletBasis& basis,
                                     const SufficientStats& stats,
                                     std::span<const double> f_coeffs, const ReactionModel& f0) {
    return girsanov_from_context(stats, make_girsanov_context(path, basis, f0), f_coeffs);
}

LanStatistics lan_statistics(const SpaceTimePath& path, const ReactionModel& h,
                             const ReactionModel& f0) {
    const std::size_t n = path.grid.n;
    if (n == 0 || path.n_steps == 0) throw ConfigError("lan_statistics: empty path");
    const double dy = path.grid.dy;
    const double dt = path.dt;
    std::vector<double> lap(n), h_vals(n), f0_vals(n), resid(n);
    double w_acc = 0.0;
    double i_acc = 0.0;
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        const auto x_prev = path.frame(m);
        const auto x_next = path.frame(m + 1);
        neumann_laplacian_apply(x_prev, dy, lap);
        h.eval_field(x_prev, h_vals);
        f0.eval_field(x_prev, f0_vals);
        for (std::size_t i = 0; i < n; ++i) {
            resid[i] = x_next[i] - x_prev[i] - dt * (lap[i] + f0_vals[i]);
        }
        w_acc += kernels::dot(h_vals.data(), resid.data(), n);
        i_acc += kernels::dot(h_vals.data(), h_vals.data(), n);
    }
    const double lambda = path.grid.lambda;
    LanStatistics out;
    out.w_lambda = w_acc * dy / std::sqrt(lambda);
    out.i_lambda = i_acc * dt * dy / lambda;
    return out;
}

namespace {

constexpr char kPosteriorMagic[5] = {'S', 'P', 'S', 'T', '1'};
constexpr std::uint32_t kPosteriorVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ConfigError("posterior file: truncated stream");
    return value;
}

}  // namespace

void write_posterior(const PosteriorGaussian& post, std::ostream& out) {
    out.write(kPosteriorMagic, sizeof(kPosteriorMagic));
    write_raw(out, kPosteriorVersion);
    write_raw(out, static_cast<std::uint64_t>(post.dim));
    const std::string descriptor = post.basis_descriptor_text;
    write_raw(out, static_cast<std::uint64_t>(descriptor.size()));
    out.write(descriptor.data(), static_cast<std::streamsize>(descriptor.size()));
    write_raw(out, post.prior.beta0);
    out.write(reinterpret_cast<const char*>(post.mean.data()),
              static_cast<std::streamsize>(post.mean.size() * sizeof(double)));
    for (std::size_t r = 0; r < post.dim; ++r) {
        out.write(reinterpret_cast<const char*>(post.cov_factor.data() + r * post.dim),
                  static_cast<std::streamsize>((r + 1) * sizeof(double)));
    }
    if (!out) throw ConfigError("posterior file: write failed");
}

void write_posterior_file(const PosteriorGaussian& post, const std::string& filename) {
    std::ofstream out(filename, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + filename);
    write_posterior(post, out);
}

PosteriorGaussian read_posterior(std::istream& in) {
    char magic[5];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kPosteriorMagic, sizeof(kPosteriorMagic)) != 0) {
        throw ConfigError("posterior file: bad magic");
    }
    if (read_raw<std::uint32_t>(in) != kPosteriorVersion) {
        throw ConfigError("posterior file: unsupported version");
    }
    PosteriorGaussian post;
    post.dim = read_raw<std::uint64_t>(in);
    if (post.dim == 0 || post.dim > (1u << 20)) throw ConfigError("posterior file: bad dimension");
    const auto desc_len = read_raw<std::uint64_t>(in);
    post.basis_descriptor_text.resize(desc_len);
    in.read(post.basis_descriptor_text.data(), static_cast<std::streamsize>(desc_len));
    post.prior.beta0 = read_raw<double>(in);
    post.mean.resize(post.dim);
    in.read(reinterpret_cast<char*>(post.mean.data()),
            static_cast<std::streamsize>(post.dim * sizeof(double)));
    post.cov_factor.assign(post.dim * post.dim, 0.0);
    for (std::size_t r = 0; r < post.dim; ++r) {
        in.read(reinterpret_cast<char*>(post.cov_factor.data() + r * post.dim),
                static_cast<std::streamsize>((r + 1) * sizeof(double)));
    }
    if (!in) throw ConfigError("posterior file: truncated stream");
    // Rebuild the prior variances from the descriptor.
    const WaveletBasis basis = basis_from_json(nlohmann::json::parse(post.basis_descriptor_text));
    post.prior = prior_covariance(basis, post.prior.beta0);
    return post;
}

PosteriorGaussian read_posterior_file(const std::string& filename) {
    std::ifstream in(filename, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + filename);
    return read_posterior(in);
}

void write_band_csv(const CredibleBand& band, const std::string& filename) {
    std::ofstream out(filename);
    if (!out) throw ConfigError("cannot open for writing: " + filename);
    out << "x,lower,median,upper,sd_analytic\n";
    char buf[512];
    for (std::size_t i = 0; i < band.x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", band.x[i],
                      band.lower[i], band.median[i], band.upper[i], band.sd_analytic[i]);
        out << buf;
    }
    if (!out) throw ConfigError("band csv: write failed");
}

}  // namespace spdebayes
