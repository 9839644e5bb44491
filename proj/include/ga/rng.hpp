#pragma once

// Deterministic PRNG used by every stochastic operation in the pipeline.
//
// The generator is xoshiro256** (Blackman & Vigna, public domain), with its
// 256-bit state expanded from a single 64-bit seed via splitmix64 (Steele,
// Lea & Flood, public domain). Both algorithms are reproduced below in full
// so that sequences are identical on every platform and toolchain. The
// <random> distributions are deliberately not used: the standard leaves
// their output unspecified, which would break byte-identical reruns.
//
//   splitmix64(s):
//     z = (s += 0x9E3779B97F4A7C15)
//     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     return z ^ (z >> 31)
//
//   xoshiro256**:
//     result = rotl(s1 * 5, 7) * 9
//     t = s1 << 17
//     s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)
//
// Derived quantities are fully specified as well: doubles use the top 53
// bits, bounded integers use rejection sampling, normals use Box-Muller.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ga::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a, used to fold string labels into derived stream seeds.
inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) {
            return (x << k) | (x >> (64 - k));
        };
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Standard normal via Box-Muller; stateless apart from the u64 stream.
    double normal() {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
        const std::uint64_t rem = (-n) % n;  // 2^64 mod n
        const std::uint64_t limit = 0ULL - rem;
        std::uint64_t x = next_u64();
        while (limit != 0 && x >= limit) x = next_u64();
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Independent stream derived from the original seed, not current state,
    // so forks do not depend on how much of the parent was consumed.
    Rng fork(std::string_view label, std::uint64_t index = 0) const {
        std::uint64_t s = seed_ ^ hash_label(label);
        s = s * 0x9E3779B97F4A7C15ULL + index;
        std::uint64_t sm = s;
        return Rng(splitmix64(sm));
    }

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

}  // namespace ga::rng
