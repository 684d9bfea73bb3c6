#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace leapbridge::rng {

// All randomness in the toolkit flows through std::mt19937_64, whose output
// sequence is fixed by the standard, plus the hand-rolled draws below.
// std::uniform_int_distribution and friends are implementation-defined, so
// using them would break seed portability across standard libraries.
using Engine = std::mt19937_64;

inline Engine make_engine(uint64_t seed) {
    return Engine(seed);
}

// Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
inline uint64_t below(Engine & g, uint64_t n) {
    if (n == 0) {
        return 0;
    }
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        const uint64_t r = g();
        if (r >= threshold) {
            return r % n;
        }
    }
}

// Uniform integer in [lo, hi], inclusive.
inline uint64_t between(Engine & g, uint64_t lo, uint64_t hi) {
    return lo + below(g, hi - lo + 1);
}

// Uniform double in [0, 1) with 53 bits of precision.
inline double unit(Engine & g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// splitmix64 finalizer; good avalanche for seed mixing.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, the stable byte hash behind per-record seeds.
inline uint64_t fnv1a(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Per-record seed = mix(global_seed, hash(record_id)). Stable across runs and
// platforms, so corpus processing can be data-parallel and order-independent.
inline uint64_t record_seed(uint64_t global_seed, std::string_view record_id) {
    return mix64(mix64(global_seed) ^ fnv1a(record_id));
}

}  // namespace leapbridge::rng
