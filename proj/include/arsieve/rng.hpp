#pragma once

/** @file
 * Platform-stable random streams.
 *
 * The generator family is xoshiro256** (Blackman and Vigna), state seeded by
 * four successive outputs of SplitMix64 applied to the 64-bit seed. Sub-seeds
 * for parallel tasks come from stable_mix(), a chained SplitMix64 finalizer:
 *
 *     mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
 *                z = (z ^ (z >> 27)) * 0x94D049BB133111EB
 *                return z ^ (z >> 31)
 *
 *     stable_mix(s, i1, ..., ik):
 *                h = mix64(s)
 *                for each index i: h = mix64(h + 0x9E3779B97F4A7C15 * (i + 1))
 *
 * mix64 is a bijection on 64-bit words and 0x9E37... is odd, so for a fixed
 * prefix stable_mix is injective in its last index.
 *
 * Normal draws use the Marsaglia polar method; the second value of each
 * accepted pair is cached inside the generator.
 */

#include <cmath>
#include <cstdint>
#include <limits>

#include "arsieve/error.hpp"

namespace arsieve {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

[[nodiscard]] constexpr std::uint64_t stable_mix(std::uint64_t root) noexcept { return mix64(root); }

template <typename... Indices>
[[nodiscard]] constexpr std::uint64_t stable_mix(std::uint64_t root, std::uint64_t index,
                                                 Indices... rest) noexcept {
    std::uint64_t h = mix64(root);
    h = mix64(h + kGoldenGamma * (index + 1));
    ((h = mix64(h + kGoldenGamma * (static_cast<std::uint64_t>(rest) + 1))), ...);
    return h;
}

/// xoshiro256** with a cached spare normal deviate. Satisfies
/// UniformRandomBitGenerator. Never shared between concurrent tasks.
class SeededGenerator {
public:
    using result_type = std::uint64_t;

    explicit SeededGenerator(std::uint64_t seed) noexcept : seed_(seed) {
        std::uint64_t z = seed;
        for (auto& word : state_) {
            z += kGoldenGamma;
            word = mix64(z);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    friend double draw_standard_normal(SeededGenerator& gen);

    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t state_[4]{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Uniform integer in [0, n). The top 2^64 mod n outputs are rejected so
/// every residue is equally likely.
[[nodiscard]] inline std::uint64_t draw_uniform_index(SeededGenerator& gen, std::uint64_t n) {
    require(n > 0, ErrorKind::invalid_input, "draw_uniform_index: n must be positive");
    const std::uint64_t tail = (0 - n) % n;  // 2^64 mod n
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - tail;
    for (;;) {
        const std::uint64_t x = gen();
        if (x <= limit) return x % n;
    }
}

[[nodiscard]] inline double draw_standard_normal(SeededGenerator& gen) {
    if (gen.has_spare_) {
        gen.has_spare_ = false;
        return gen.spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
        u = 2.0 * gen.uniform01() - 1.0;
        v = 2.0 * gen.uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    gen.spare_ = v * scale;
    gen.has_spare_ = true;
    return u * scale;
}

}  // namespace arsieve
