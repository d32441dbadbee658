#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dynmap {

// Input failed a domain invariant (range, normalization, uniqueness).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File missing, unreadable, unwritable, or not parseable.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Vector/matrix shapes do not line up.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable substream seed from (seed, tag, index). Used so that per-cell,
// per-sample and per-epoch streams never alias.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t index = 0) {
    uint64_t h = seed;
    for (char c : tag) h = splitmix64(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
    return splitmix64(h ^ index);
}

// Deterministic RNG with fixed float mappings. std::mt19937_64 output is
// specified by the standard, and the mappings below avoid the
// implementation-defined std::*_distribution classes, so streams are
// reproducible across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), rejection sampled
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do { x = gen_(); } while (x >= limit);
        return x % n;
    }

    // standard normal via Box-Muller (cosine branch only)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace dynmap
