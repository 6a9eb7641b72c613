#pragma once

#include <cassert>
#include <cstdint>
#include <random>

namespace railforge {

// Seedable generator used everywhere randomness is needed. The engine is
// std::mt19937_64 (its output sequence is pinned by the standard); bounded
// and real draws are hand-rolled so results do not depend on the standard
// library's distribution implementations.
//
// Stream splitting: independent phases derive their engine with
// Rng(seed, stream) where stream is a small constant documented at the call
// site (sa_solver uses stream 1 for initial-temperature sampling and
// stream 2 for the Metropolis chain). The (seed, stream) pair is mixed with
// splitmix64 before seeding the engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng(std::uint64_t seed, std::uint64_t stream)
        : engine_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0xbf58476d1ce4e5b9ULL))) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n). Rejection sampling keeps the mapping
    // implementation-independent.
    std::uint64_t uniform_index(std::uint64_t n) {
        assert(n > 0);
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    static constexpr const char* name() { return "mt19937_64"; }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace railforge
