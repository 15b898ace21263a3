#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace photostyle {

// All randomness in the toolkit flows from one global seed. Stage-level
// generators are derived by hashing a stage name (and optional indices)
// into the seed, so that adding a stage never perturbs the streams of the
// others. FNV-1a + splitmix64 keeps the derivation portable and stable.

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
    return splitmix64(seed ^ fnv1a64(stage));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage,
                                 std::uint64_t index) {
    return splitmix64(derive_seed(seed, stage) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage,
                                 std::uint64_t i, std::uint64_t j) {
    return splitmix64(derive_seed(seed, stage, i) + 0x9e3779b97f4a7c15ULL * (j + 1));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view stage) {
    return Rng(derive_seed(seed, stage));
}

}  // namespace photostyle
