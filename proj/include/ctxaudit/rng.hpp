#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ctxaudit::rng {

// splitmix64, the standard 64-bit mixer. Used for seeding and stream
// derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Single mixing step over a value (no carried state).
inline std::uint64_t splitmix_once(std::uint64_t state) { return splitmix64(state); }

// xoshiro256** with explicit, platform-independent distributions on top.
//
// Audits must replay bit-exactly across machines, so nothing here depends on
// std::<random> distributions (whose output is implementation-defined).
//
// Stream-splitting rule: an Engine remembers the seed it was constructed
// from; child(id) yields an independent engine keyed by (seed, id) only,
// regardless of how much the parent has been consumed. Nested children hash
// the full path, e.g. Engine(s).child(a).child(b) == f(s, a, b).
class Engine {
public:
    explicit Engine(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }

    Engine child(std::uint64_t stream_id) const {
        std::uint64_t sm = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
        return Engine(splitmix64(sm));
    }

    std::uint64_t next_u64() {
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

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, bound). Rejection keeps it exactly uniform.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller. No cached spare: two uniforms are
    // consumed per draw so the stream position is a pure function of the
    // draw count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t state_[4];
};

// FNV-1a over bytes; the deterministic text hash used for scripted backends
// and config digests.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ctxaudit::rng
