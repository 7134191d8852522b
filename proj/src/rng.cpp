#include "spdebayes/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace spdebayes {

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;  // golden ratio
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;  // sqrt(3)-1

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

inline void philox_round(std::array<std::uint64_t, 4>& ctr, const std::array<std::uint64_t, 2>& key) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const std::array<std::uint64_t, 2>& key) {
    std::array<std::uint64_t, 4> ctr = counter;
    std::array<std::uint64_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, k);
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return ctr;
}

double to_unit_open(std::uint64_t word) {
    return (static_cast<double>(word >> 11) + 1.0) * 0x1.0p-53;
}

namespace {

// One Philox call -> the Box-Muller pair for cells (2k, 2k+1).
inline void normal_pair(const std::array<std::uint64_t, 2>& key, std::uint64_t tag,
                        std::uint64_t replicate, std::uint64_t step, std::uint64_t pair,
                        double& z0, double& z1) {
    const auto words = philox4x64({step, pair, replicate, tag}, key);
    const double u1 = to_unit_open(words[0]);
    const double u2 = to_unit_open(words[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    z0 = r * std::cos(angle);
    z1 = r * std::sin(angle);
}

}  // namespace

void NoiseStream::fill_normals(std::uint64_t step, double* out, std::size_t n) const {
    std::size_t i = 0;
    for (std::uint64_t pair = 0; i + 2 <= n; ++pair, i += 2) {
        normal_pair(key_, tag_, replicate_, step, pair, out[i], out[i + 1]);
    }
    if (i < n) {
        double z0, z1;
        normal_pair(key_, tag_, replicate_, step, i / 2, z0, z1);
        out[i] = z0;
    }
}

double NoiseStream::normal_at(std::uint64_t step, std::uint64_t cell) const {
    double z0, z1;
    normal_pair(key_, tag_, replicate_, step, cell / 2, z0, z1);
    return (cell % 2 == 0) ? z0 : z1;
}

Seed128 parse_seed(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty seed");
    Seed128 seed;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        const std::string hex = text.substr(2);
        if (hex.empty() || hex.size() > 32) throw std::invalid_argument("bad hex seed: " + text);
        std::uint64_t lo = 0, hi = 0;
        for (char c : hex) {
            int digit;
            if (c >= '0' && c <= '9') digit = c - '0';
            else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
            else throw std::invalid_argument("bad hex seed: " + text);
            hi = (hi << 4) | (lo >> 60);
            lo = (lo << 4) | static_cast<std::uint64_t>(digit);
        }
        seed.lo = lo;
        seed.hi = hi;
    } else {
        std::size_t pos = 0;
        seed.lo = std::stoull(text, &pos, 10);
        if (pos != text.size()) throw std::invalid_argument("bad seed: " + text);
    }
    return seed;
}

std::string format_seed(const Seed128& seed) {
    char buf[2 + 32 + 1];
    std::snprintf(buf, sizeof(buf), "0x%016llx%016llx",
                  static_cast<unsigned long long>(seed.hi),
                  static_cast<unsigned long long>(seed.lo));
    return buf;
}

}  // namespace spdebayes
