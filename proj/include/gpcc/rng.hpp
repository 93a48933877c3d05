#pragma once

#include <cstdint>
#include <random>

#include "gpcc/quantile.hpp"

namespace gpcc {

// splitmix64; used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic stream of doubles. Sub-streams derived from (seed, index)
// are independent of evaluation order, which keeps parallel sampling
// bit-identical to serial sampling.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    static Rng derive(std::uint64_t seed, std::uint64_t index) {
        return Rng(mix64(seed ^ mix64(index + 0x51ed270b214458e1ULL)));
    }

    double uniform01() {
        // 53-bit mantissa in (0, 1); never exactly 0 or 1.
        const std::uint64_t r = engine_();
        return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inverse-CDF sampling keeps the stream consumption fixed at one draw
    // per variate regardless of the value drawn.
    double normal() { return normal_quantile(uniform01()); }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace gpcc
