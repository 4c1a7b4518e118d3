#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <type_traits>

#include "diffcls/errors.hpp"

namespace diffcls {

// splitmix64 (Vigna). Used to derive independent stream seeds from a base
// seed plus tags; the raw base seed is never fed to an engine directly.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (0x9E3779B97F4A7C15ULL + b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

// Named stream tags. All randomness in the library flows through seeds
// derived as mix_seed(user_seed, tag, ...).
namespace seed_tag {
inline constexpr std::uint64_t init = 0x494E4954;       // network init
inline constexpr std::uint64_t data = 0x44415441;       // dataset shuffling
inline constexpr std::uint64_t train = 0x5452414E;      // timesteps/noise/negatives
inline constexpr std::uint64_t eval_noise = 0x4556414C; // classifier plan noise
inline constexpr std::uint64_t glyph = 0x474C5950;      // synthetic data generation
inline constexpr std::uint64_t corrupt = 0x434F5252;    // pixel-noise corruption
inline constexpr std::uint64_t sample = 0x53414D50;     // ancestral sampling
} // namespace seed_tag

// Deterministic random stream. mt19937_64 output is pinned by the standard;
// the uniform/normal transforms below are ours, so the full draw sequence is
// reproducible bit-for-bit across compilers. std::*_distribution is avoided
// on purpose: its output sequence is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive, via unbiased rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw ArgumentError("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(gen_()); // full 64-bit range
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t r;
        do {
            r = gen_();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % span);
    }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
    // so the stream position after n draws is independent of call grouping.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Works for Eigen vectors and std::vector alike.
    template <typename Vec>
    void fill_normal(Vec& v) {
        using S = std::decay_t<decltype(v[0])>;
        for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()); ++i)
            v[i] = static_cast<S>(normal());
    }

private:
    std::mt19937_64 gen_;
};

} // namespace diffcls
