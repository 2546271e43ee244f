#pragma once

// Deterministic random streams. Hand-rolled so that a fixed seed reproduces
// the same draws bit-for-bit regardless of the standard library's
// <random> distribution implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace mcrepar {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable mixing of a root seed with cell coordinates; used to derive
// independent per-cell streams (e.g. per (M, replication) sweep cell).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0x6a09e667f3bcc909ULL,
                              std::uint64_t c = 0xbb67ae8584caa73bULL) {
    std::uint64_t s = seed;
    s ^= splitmix64(a);
    std::uint64_t t = splitmix64(b) + 0x9e3779b97f4a7c15ULL * (c + 1);
    s ^= splitmix64(t);
    return splitmix64(s);
}

// xoshiro256++ with splitmix64 seed expansion.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; one spare cached per pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]: keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    // Exponential with mean 1.
    double exponential() { return -std::log(1.0 - uniform01()); }

    // Rayleigh with scale 1 (density w exp(-w^2/2)).
    double rayleigh() { return std::sqrt(-2.0 * std::log(1.0 - uniform01())); }

    void fill_normal(std::span<double> out) {
        for (auto& v : out) v = normal();
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
    double spare_{0.0};
    bool has_spare_{false};
};

}  // namespace mcrepar
