#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace spdebayes {

// 128-bit seed; parses/prints as 0x-prefixed hex (up to 32 digits) or
// plain decimal (then hi = 0).
struct Seed128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    friend bool operator==(const Seed128&, const Seed128&) = default;
};

Seed128 parse_seed(const std::string& text);
std::string format_seed(const Seed128& seed);

// Philox4x64-10 counter-based generator (Salmon et al. 2011). A pure
// function of (counter, key): the same key/counter pair gives the same
// output words on every thread, platform and call order.
std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const std::array<std::uint64_t, 2>& key);

// Uniform in (0, 1]; uses the top 53 bits.
double to_unit_open(std::uint64_t word);

// Independent N(0,1) streams addressed by (seed, purpose, replicate, step,
// cell). Cells are consumed in Box-Muller pairs: one Philox call serves the
// cells (2k, 2k+1) of a step, so normal_at(step, cell) is still a pure
// function of its arguments.
class NoiseStream {
public:
    enum class Purpose : std::uint64_t {
        SimNoise = 0,
        PosteriorDraws = 1,
        PriorDraws = 2,
    };

    NoiseStream(Seed128 seed, Purpose purpose, std::uint64_t replicate)
        : key_{seed.lo, seed.hi},
          tag_((static_cast<std::uint64_t>(purpose) << 32) | 0x5bd1e995ull),
          replicate_(replicate) {}

    // Fills out[0..n) with the normals for cells 0..n of the given step.
    void fill_normals(std::uint64_t step, double* out, std::size_t n) const;

    double normal_at(std::uint64_t step, std::uint64_t cell) const;

private:
    std::array<std::uint64_t, 2> key_;
    std::uint64_t tag_;
    std::uint64_t replicate_;
};

}  // namespace spdebayes
