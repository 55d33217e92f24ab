#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "core.hpp"

namespace pclt {

// SplitMix64 step: full-period counter sequence with a strong mix. Streams for
// (master_seed, tag, index) are derived by hashing, so any replica can be
// generated without touching the generator state of any other replica. That is
// what makes thread-count-independent reproducibility possible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= v & 0xFF;
        h *= 0x100000001B3ULL;
        v >>= 8;
    }
    return h;
}

struct SeedPolicy {
    std::uint64_t master_seed = 0;

    // Documented derivation: FNV-1a over (master_seed, tag, index), then one
    // SplitMix64 scramble. Distinct (tag, index) pairs give distinct streams.
    std::uint64_t derive(std::string_view tag, std::uint64_t index) const {
        std::uint64_t h = fnv1a64(tag);
        h = hash_combine(h, master_seed);
        h = hash_combine(h, index);
        std::uint64_t s = h;
        return splitmix64(s);
    }
};

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; draws two uniforms per call, no cached spare (keeps the
    // stream position independent of caller history).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 == 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
    }

    // Exact Poisson sampling by multiplicative inversion, chunked so exp(-lam)
    // never underflows. O(mean) time, fine for the point counts we use.
    std::uint64_t poisson(double mean) {
        if (!(mean > 0)) return 0;
        std::uint64_t n = 0;
        double rem = mean;
        while (rem > 0) {
            double lam = rem > 500.0 ? 500.0 : rem;
            rem -= lam;
            double threshold = std::exp(-lam);
            double prod = uniform();
            while (prod > threshold) {
                ++n;
                prod *= uniform();
            }
        }
        return n;
    }

  private:
    std::uint64_t state_;
};

}  // namespace pclt
