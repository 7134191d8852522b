#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spdebayes/grid.hpp"
#include "spdebayes/reaction.hpp"
#include "spdebayes/rng.hpp"

namespace spdebayes {

// Semi-implicit Euler-Maruyama configuration for
//   dX = Lap X dt + f(X) dt + dW,  Neumann boundary, X_0(y) = chi(y/lambda).
struct SimConfig {
    SpatialGrid grid;
    double T = 1.0;
    double dt = 2e-4;
    enum class Initial { Zero, ScaledProfile };
    Initial initial = Initial::Zero;
    std::vector<double> chi;  // samples of chi at the unit-grid cell centers (size n)
    ReactionModel model;
    Seed128 seed;
    bool record_noise = false;
    bool noise_off = false;  // test hook: deterministic PDE

    std::size_t n_steps() const;
    void validate() const;
};

// Streaming access to a simulation: called once per step with the state
// before and after. Frames are only valid during the call.
class StepObserver {
public:
    virtual ~StepObserver() = default;
    virtual void on_begin(const SimConfig& /*cfg*/) {}
    virtual void on_step(std::size_t /*step*/, std::span<const double> /*x_prev*/,
                         std::span<const double> /*x_next*/,
                         std::span<const double> /*xi*/) {}
    virtual void on_end() {}
};

// X_{m+1} = (I - dt Lap_h)^{-1} (X_m + dt f(X_m) + sqrt(dt/dy) xi_m).
// Deterministic: bit-identical for identical (seed, replicate, cfg).
SpaceTimePath simulate(const SimConfig& cfg, std::uint64_t replicate = 0);

// Same stepper without materializing the full path.
void simulate_stream(const SimConfig& cfg, std::uint64_t replicate,
                     std::span<StepObserver* const> observers);
void simulate_stream(const SimConfig& cfg, std::uint64_t replicate, StepObserver& observer);

struct ProxyOverrides {
    double T = 1.0;
    double dt = 2e-4;
    int points_per_unit = 16;
    Seed128 seed;
    bool record_noise = false;
};

// Large-domain proxy for the whole-line limit process Z with constant
// initial value chi_value: interior cells (the central half) approximate
// Z_t marginals.
SpaceTimePath simulate_limit_proxy(const ReactionModel& model, double chi_value,
                                   double proxy_lambda, const ProxyOverrides& overrides,
                                   std::uint64_t replicate = 0);

SimConfig limit_proxy_config(const ReactionModel& model, double chi_value,
                             double proxy_lambda, const ProxyOverrides& overrides);

// Index range [first, last) of the central half of a grid.
std::pair<std::size_t, std::size_t> interior_range(const SpatialGrid& grid);

struct StudyRows {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // one per replicate, replicate order
};

// Runs n_reps independent replicates (replicate-keyed RNG streams) across a
// worker pool; rows are collected in replicate order so results do not
// depend on the thread count.
StudyRows replicate(const SimConfig& cfg, std::size_t n_reps,
                    std::vector<std::string> columns,
                    const std::function<std::vector<double>(const SimConfig&, std::uint64_t)>& body,
                    unsigned threads);

// Worker-pool parallel map used by replicate() and the studies.
void parallel_for_replicates(std::size_t n_reps, unsigned threads,
                             const std::function<void(std::uint64_t)>& body);

unsigned default_thread_count();

}  // namespace spdebayes
