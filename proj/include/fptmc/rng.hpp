#pragma once

// Reproducible random stream: a (seed, substream) pair fully determines the
// draw sequence on every platform. The generator is xoshiro256++ with its
// state expanded from the pair by splitmix64, so constructing a fresh
// substream per Monte Carlo run is essentially free. Normals use the
// Marsaglia polar method; nothing implementation-defined is involved.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace fptmc {

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t substream)
        : seed_(seed), substream_(substream) {
        std::uint64_t sm = seed + 0x9E3779B97F4A7C15ULL * (substream + 1);
        for (auto& w : state_) w = splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t substream() const { return substream_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = std::rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53 random bits.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    bool bernoulli(double p) { return u01() < p; }

    double exponential(double mean) { return -mean * std::log1p(-u01()); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t substream_;
    std::array<std::uint64_t, 4> state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fptmc
