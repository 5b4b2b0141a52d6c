#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace canopy {

// Stateless counter-based generator: every draw is a pure function of
// (seed, stream, counter), so results never depend on evaluation order or
// thread count.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ULL))) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t counter) const { return mix(key_ ^ mix(counter)); }

    // Uniform in [0, 1).
    double uniform(std::uint64_t counter) const { return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53; }
    // Uniform in (0, 1].
    double uniform_open0(std::uint64_t counter) const {
        return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }
    // Standard normal from counters 2c and 2c+1 (Box-Muller, cosine branch).
    double normal(std::uint64_t counter) const {
        const double u1 = uniform_open0(2 * counter), u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    // Poisson draw; large means are split into chunks of at most 32 and each
    // chunk drawn by multiplication of uniforms. Uses counters from
    // counter * 2^32 upward.
    std::uint64_t poisson(double mean, std::uint64_t counter) const {
        std::uint64_t total = 0, c = counter << 32;
        while (mean > 0.0) {
            const double chunk = std::min(mean, 32.0);
            mean -= chunk;
            const double limit = std::exp(-chunk);
            double p = 1.0;
            for (;;) {
                p *= uniform(c++);
                if (p <= limit) break;
                ++total;
            }
        }
        return total;
    }

private:
    std::uint64_t key_;
};

}  // namespace canopy
