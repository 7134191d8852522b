#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spdebayes/grid.hpp"
#include "spdebayes/reaction.hpp"
#include "spdebayes/rng.hpp"
#include "spdebayes/sim.hpp"
#include "spdebayes/wavelet.hpp"

#include <nlohmann/json_fwd.hpp>

namespace spdebayes {

// Likelihood sufficient statistics: the log-likelihood of f = f^T Psi equals
// a^T f - (1/2) f^T G f with
//   G = sum_{m,i} Psi(X_m(y_i)) Psi(X_m(y_i))^T dy dt   (Ito left point)
//   a = sum_{m,i} Psi(X_m(y_i)) [X_{m+1} - X_m - dt Lap_h X_m](y_i) dy.
struct SufficientStats {
    std::size_t dim = 0;
    double lambda = 0.0;
    double T = 0.0;
    std::vector<double> G;  // dim x dim row-major, symmetric PSD
    std::vector<double> a;

    double g_at(std::size_t r, std::size_t c) const { return G[r * dim + c]; }
};

// Streaming accumulator usable as a simulation observer; optionally also
// accumulates the f0 cross terms needed by the Girsanov decomposition.
class StatsAccumulator : public StepObserver {
public:
    StatsAccumulator(const WaveletBasis& basis, const SpatialGrid& grid, double dt,
                     const ReactionModel* f0 = nullptr);

    void on_step(std::size_t step, std::span<const double> x_prev,
                 std::span<const double> x_next, std::span<const double> xi) override;

    // Manual feed for path-based accumulation.
    void consume(std::span<const double> x_prev, std::span<const double> x_next);

    SufficientStats take_stats();

    // f0 cross terms (valid when constructed with f0):
    //   b = sum Psi(X) f0(X) dt dy,  s0 = sum f0(X) increment dy,
    //   q0 = sum f0(X)^2 dt dy.
    const std::vector<double>& cross_b() const { return b_; }
    double cross_s0() const { return s0_; }
    double cross_q0() const { return q0_; }

private:
    const WaveletBasis& basis_;
    const ReactionModel* f0_;
    SpatialGrid grid_;
    double dt_;
    std::size_t dim_;
    std::vector<double> G_;
    std::vector<double> a_;
    std::vector<double> b_;
    double s0_ = 0.0;
    double q0_ = 0.0;
    std::vector<double> lap_;
    std::vector<double> f0_vals_;
    std::vector<std::size_t> idx_;
    std::vector<double> val_;
    std::size_t samples_ = 0;
};

SufficientStats accumulate_stats(const SpaceTimePath& path, const WaveletBasis& basis);

double log_likelihood(const SufficientStats& stats, std::span<const double> coeffs);

// Exact conjugate posterior N(mu, Q), Q = (G + Sigma^-1)^-1, mu = Q a.
struct PosteriorGaussian {
    std::size_t dim = 0;
    std::vector<double> mean;        // mu
    std::vector<double> cov_factor;  // lower-triangular L, L L^T = Q, row-major
    PriorSpec prior;
    nlohmann::json basis_descriptor() const;
    std::string basis_descriptor_text;  // serialized basis config block
    double jitter_used = 0.0;           // 0 unless roundoff jitter was needed
    double condition_estimate = 0.0;    // max/min diagonal of the precision factor

    double pointwise_sd(std::span<const double> psi) const;
};

PosteriorGaussian posterior(const SufficientStats& stats, const PriorSpec& prior,
                            const WaveletBasis& basis);

// n independent draws mu + L z, row-major n x dim; deterministic in seed.
std::vector<double> sample_posterior(const PosteriorGaussian& post, std::size_t n,
                                     Seed128 seed);

struct CredibleBand {
    std::vector<double> x;
    std::vector<double> lower;
    std::vector<double> median;
    std::vector<double> upper;
    std::vector<double> sd_analytic;
};

CredibleBand credible_band(const PosteriorGaussian& post, const WaveletBasis& basis,
                           std::span<const double> x_grid, double level,
                           std::size_t n_draws, Seed128 seed);

struct GirsanovTerms {
    double martingale_term = 0.0;  // M_lambda
    double hellinger_sq = 0.0;     // h_lambda(f, f0)^2
    double loglik_diff = 0.0;      // l(f) - l(f0)
};

// Path sums shared by all candidate f for a fixed (path, basis, f0).
struct GirsanovContext {
    std::vector<double> b;
    double s0 = 0.0;
    double q0 = 0.0;
    double lambda = 0.0;
};

GirsanovContext make_girsanov_context(const SpaceTimePath& path, const WaveletBasis& basis,
                                      const ReactionModel& f0);
GirsanovTerms girsanov_from_context(const SufficientStats& stats, const GirsanovContext& ctx,
                                    std::span<const double> f_coeffs);
GirsanovTerms girsanov_decomposition(const SpaceTimePath& path, const WaveletBasis& basis,
                                     const SufficientStats& stats,
                                     std::span<const double> f_coeffs, const ReactionModel& f0);

struct LanStatistics {
    double w_lambda = 0.0;  // (1/sqrt(lambda)) int <h(X), dW>
    double i_lambda = 0.0;  // (1/lambda) int ||h(X)||^2 dt
};

// Residuals are reconstructed from the path under the stated f0;
// requires a path simulated under f0 (or its noise record).
LanStatistics lan_statistics(const SpaceTimePath& path, const ReactionModel& h,
                             const ReactionModel& f0);

// Binary posterior format: magic "SPST1", u32 version, u64 dim, u64 length +
// basis descriptor JSON, f64 beta0, mean f64[dim], packed lower-triangular
// cov factor f64[dim*(dim+1)/2].
void write_posterior(const PosteriorGaussian& post, std::ostream& out);
void write_posterior_file(const PosteriorGaussian& post, const std::string& filename);
PosteriorGaussian read_posterior(std::istream& in);
PosteriorGaussian read_posterior_file(const std::string& filename);

void write_band_csv(const CredibleBand& band, const std::string& filename);

}  // namespace spdebayes
