#pragma once

#include <cstdint>
#include <random>

namespace tperf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent, reproducible generator for replicate `k` under `master`.
/// Depends only on (master, k), never on scheduling.
inline std::mt19937_64 seed_stream(std::uint64_t master, std::uint64_t k) {
    std::uint64_t state = master;
    const std::uint64_t a = splitmix64(state);
    state = a ^ (k * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL);
    std::uint32_t words[8];
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t v = splitmix64(state);
        words[2 * i] = static_cast<std::uint32_t>(v);
        words[2 * i + 1] = static_cast<std::uint32_t>(v >> 32);
    }
    std::seed_seq seq(std::begin(words), std::end(words));
    return std::mt19937_64(seq);
}

/// 64-bit seed for sub-stream `k` of `master`, for APIs that take a seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
    std::uint64_t state = master ^ (k * 0xD1B54A32D192ED03ULL);
    splitmix64(state);
    return splitmix64(state);
}

}  // namespace tperf
