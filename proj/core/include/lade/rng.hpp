#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace lade::rng {

// Counter-based generator built on the splitmix64 finalizer. Every consumer
// derives its own stream from (seed, tags...), so sample i of stream s is a
// pure function of (seed, tags, i) and never depends on what other streams
// drew in between. Bump kGeneratorVersion if the mixing ever changes.
inline constexpr std::string_view kGeneratorName = "splitmix64-counter";
inline constexpr int kGeneratorVersion = 1;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a, then one mixing round to spread short tags.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

class Stream {
 public:
    Stream() = default;
    explicit Stream(std::uint64_t seed) : key_(mix64(seed)) {}

    /// Independent child stream; tags may be nested arbitrarily deep.
    [[nodiscard]] Stream derive(std::uint64_t tag) const {
        Stream child;
        child.key_ = mix64(key_ ^ mix64(tag));
        return child;
    }
    [[nodiscard]] Stream derive(std::string_view tag) const { return derive(hash_tag(tag)); }

    std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1); safe as a log/Box-Muller input.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

 private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Named sub-seed of a base seed; how one run seed fans out into independent
/// data/init/shuffle seeds.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    return mix64(mix64(base) ^ hash_tag(tag));
}

}  // namespace lade::rng
