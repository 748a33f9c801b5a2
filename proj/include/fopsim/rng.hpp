#pragma once

#include <cstdint>
#include <random>

namespace fopsim {

// splitmix64; used to mix stream/slot ids into independent seeds so that
// channel draws, policy noise, traces etc. form separate deterministic
// streams regardless of evaluation order.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t step = 0) {
    return mix64(mix64(master ^ mix64(stream)) ^ step);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream,
                                std::uint64_t step = 0) {
    return std::mt19937_64(derive_seed(master, stream, step));
}

// Fixed stream ids, one per independent source of randomness.
namespace streams {
inline constexpr std::uint64_t scene = 1;      // user heights, AP layout jitter
inline constexpr std::uint64_t traces = 2;     // random-waypoint walks
inline constexpr std::uint64_t channel = 3;    // per-slot shadowing/phases
inline constexpr std::uint64_t reservoir = 4;  // ESN weight draws
inline constexpr std::uint64_t policy_init = 5;
inline constexpr std::uint64_t policy_noise = 6;
inline constexpr std::uint64_t replay = 7;
inline constexpr std::uint64_t pretrain_channel = 8;
inline constexpr std::uint64_t sdp = 9;        // randomization fallback draws
}  // namespace streams

}  // namespace fopsim
