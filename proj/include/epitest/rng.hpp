#pragma once

#include <cmath>
#include <cstdint>

namespace epitest {

/// splitmix64; used to expand seeds and to derive independent streams.
struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

/// Stream seed for replicate `index` of an ensemble keyed by `master_seed`.
inline std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t index) {
    SplitMix64 sm{master_seed + 0x9E3779B97F4A7C15ull * (index + 1)};
    sm.next();
    return sm.next();
}

/// xoshiro256** with splitmix-expanded seeding. All distributions are built
/// from raw bits here so results are bit-stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& w : s_)
            w = sm.next();
    }

    std::uint64_t next() {
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

    /// uniform on (0, 1]; never zero, safe inside logarithms
    double uniform01() { return (double(next() >> 11) + 1.0) * 0x1.0p-53; }

    /// exponential waiting time with the given rate
    double exponential(double rate) { return -std::log(uniform01()) / rate; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

} // namespace epitest
