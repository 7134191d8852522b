#include "spdebayes/sim.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "spdebayes/errors.hpp"
#include "spdebayes/kernels.hpp"

namespace spdebayes {

std::size_t SimConfig::n_steps() const {
    return static_cast<std::size_t>(std::llround(T / dt));
}

void SimConfig::validate() const {
    if (!(T > 0.0) || !(dt > 0.0)) throw ConfigError("sim: T and dt must be positive");
    const double steps = T / dt;
    if (std::abs(steps - std::round(steps)) > 1e-8 * steps) {
        throw ConfigError("sim: dt must divide T");
    }
    if (n_steps() < 1) throw ConfigError("sim: need at least one step");
    if (initial == Initial::ScaledProfile && chi.size() != grid.n) {
        throw ConfigError("sim: chi must be sampled at the unit-grid cell centers");
    }
}

namespace {

class Stepper {
public:
    Stepper(const SimConfig& cfg, std::uint64_t replicate)
        : cfg_(cfg),
          solver_(cfg.grid, cfg.dt),
          noise_(cfg.seed, NoiseStream::Purpose::SimNoise, replicate),
          x_(cfg.grid.n),
          drift_(cfg.grid.n),
          xi_(cfg.grid.n),
          next_(cfg.grid.n) {
        if (cfg.initial == SimConfig::Initial::ScaledProfile) {
            x_ = cfg.chi;
        }
        noise_scale_ = cfg.noise_off ? 0.0 : std::sqrt(cfg.dt / cfg.grid.dy);
    }

    std::span<const double> state() const { return x_; }
    std::span<const double> last_noise() const { return xi_; }

    void step(std::size_t m) {
        const std::size_t n = cfg_.grid.n;
        cfg_.model.eval_field(x_, drift_);
        if (cfg_.noise_off) {
            kernels::drift_update(x_.data(), drift_.data(), cfg_.dt, next_.data(), n);
            std::fill(xi_.begin(), xi_.end(), 0.0);
        } else {
            noise_.fill_normals(m, xi_.data(), n);
            kernels::fused_update(x_.data(), drift_.data(), xi_.data(), cfg_.dt, noise_scale_,
                                  next_.data(), n);
        }
        solver_.solve_inplace(next_);
        std::swap(x_, next_);
        if (!std::isfinite(x_[0]) || !std::isfinite(x_[n / 2]) || !std::isfinite(x_[n - 1])) {
            check_finite(m);
        }
    }

    void check_finite(std::size_t m) const {
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (!std::isfinite(x_[i])) {
                throw NumericalError("simulate: non-finite state at step " + std::to_string(m) +
                                     ", cell " + std::to_string(i));
            }
        }
    }

private:
    const SimConfig& cfg_;
    HeatSolver solver_;
    NoiseStream noise_;
    std::vector<double> x_;
    std::vector<double> drift_;
    std::vector<double> xi_;
    std::vector<double> next_;
    double noise_scale_ = 0.0;
};

}  // namespace

void simulate_stream(const SimConfig& cfg, std::uint64_t replicate,
                     std::span<StepObserver* const> observers) {
    cfg.validate();
    Stepper stepper(cfg, replicate);
    for (StepObserver* obs : observers) obs->on_begin(cfg);
    const std::size_t n_steps = cfg.n_steps();
    std::vector<double> prev(stepper.state().begin(), stepper.state().end());
    for (std::size_t m = 0; m < n_steps; ++m) {
        stepper.step(m);
        for (StepObserver* obs : observers) {
            obs->on_step(m, prev, stepper.state(), stepper.last_noise());
        }
        prev.assign(stepper.state().begin(), stepper.state().end());
    }
    for (StepObserver* obs : observers) obs->on_end();
}

void simulate_stream(const SimConfig& cfg, std::uint64_t replicate, StepObserver& observer) {
    StepObserver* ptr = &observer;
    simulate_stream(cfg, replicate, std::span<StepObserver* const>(&ptr, 1));
}

SpaceTimePath simulate(const SimConfig& cfg, std::uint64_t replicate) {
    cfg.validate();
    SpaceTimePath path;
    path.grid = cfg.grid;
    path.T = cfg.T;
    path.dt = cfg.dt;
    path.n_steps = cfg.n_steps();
    const std::size_t n = cfg.grid.n;
    path.frames.resize((path.n_steps + 1) * n);
    if (cfg.record_noise) path.noise_record.emplace(path.n_steps * n, 0.0);

    Stepper stepper(cfg, replicate);
    std::copy(stepper.state().begin(), stepper.state().end(), path.frame(0).begin());
    for (std::size_t m = 0; m < path.n_steps; ++m) {
        stepper.step(m);
        std::copy(stepper.state().begin(), stepper.state().end(), path.frame(m + 1).begin());
        if (cfg.record_noise) {
            std::copy(stepper.last_noise().begin(), stepper.last_noise().end(),
                      path.noise_record->begin() + m * n);
        }
    }
    return path;
}

SimConfig limit_proxy_config(const ReactionModel& model, double chi_value,
                             double proxy_lambda, const ProxyOverrides& overrides) {
    if (!(proxy_lambda >= 16.0)) {
        throw ConfigError("limit proxy: proxy_lambda must be >= 16");
    }
    SimConfig cfg;
    cfg.grid = make_grid(proxy_lambda, {-0.5, 0.5}, overrides.points_per_unit);
    cfg.T = overrides.T;
    cfg.dt = overrides.dt;
    cfg.model = model;
    cfg.seed = overrides.seed;
    cfg.record_noise = overrides.record_noise;
    if (chi_value != 0.0) {
        cfg.initial = SimConfig::Initial::ScaledProfile;
        cfg.chi.assign(cfg.grid.n, chi_value);
    }
    return cfg;
}

SpaceTimePath simulate_limit_proxy(const ReactionModel& model, double chi_value,
                                   double proxy_lambda, const ProxyOverrides& overrides,
                                   std::uint64_t replicate) {
    return simulate(limit_proxy_config(model, chi_value, proxy_lambda, overrides), replicate);
}

std::pair<std::size_t, std::size_t> interior_range(const SpatialGrid& grid) {
    return {grid.n / 4, grid.n / 4 + grid.n / 2};
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("SPDE_BAYES_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1 && v <= 256) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_for_replicates(std::size_t n_reps, unsigned threads,
                             const std::function<void(std::uint64_t)>& body) {
    if (threads == 0) threads = default_thread_count();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_reps));
    if (threads <= 1) {
        for (std::uint64_t rep = 0; rep < n_reps; ++rep) body(rep);
        return;
    }
    std::atomic<std::uint64_t> counter{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&]() {
        for (;;) {
            const std::uint64_t rep = counter.fetch_add(1);
            if (rep >= n_reps) return;
            try {
                body(rep);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

StudyRows replicate(const SimConfig& cfg, std::size_t n_reps, std::vector<std::string> columns,
                    const std::function<std::vector<double>(const SimConfig&, std::uint64_t)>& body,
                    unsigned threads) {
    if (n_reps < 1) throw ConfigError("replicate: n_reps must be >= 1");
    StudyRows rows;
    rows.columns = std::move(columns);
    rows.rows.resize(n_reps);
    parallel_for_replicates(n_reps, threads, [&](std::uint64_t rep) {
        try {
            rows.rows[rep] = body(cfg, rep);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw NumericalError("replicate " + std::to_string(rep) + ": " + e.what());
        }
    });
    return rows;
}

}  // namespace spdebayes
