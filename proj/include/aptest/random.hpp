#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace aptest {

/// Deterministic random substream. A (master_seed, index) pair fully determines
/// the draw sequence; distinct indices give statistically independent streams,
/// so parallel workers can each own one stream per trajectory.
class RandomStream {
  public:
    RandomStream(std::uint64_t master_seed, std::uint64_t index)
        : master_seed_(master_seed), index_(index) {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                          static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t index() const { return index_; }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached state).
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform index in [0, n).
    std::int64_t uniform_index(std::int64_t n) {
        auto idx = static_cast<std::int64_t>(uniform01() * static_cast<double>(n));
        return idx >= n ? n - 1 : idx;
    }

    /// Underlying engine, for use with <random> distributions.
    std::mt19937_64& engine() { return engine_; }

  private:
    std::uint64_t master_seed_;
    std::uint64_t index_;
    std::mt19937_64 engine_;
};

inline RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t index) {
    return RandomStream(master_seed, index);
}

}  // namespace aptest
