#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace edgeformer {

/// Seeded random stream. Wraps mt19937_64 but owns every distribution
/// transform so the produced sequences do not depend on the standard
/// library implementation. Fixed seed -> fixed byte-level outputs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_value_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection sampling, n > 0.
    std::uint64_t bounded(std::uint64_t n);

    /// Standard normal via Box-Muller; caches the spare draw.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent child stream; distinct ids give uncorrelated streams.
    Rng derive(std::uint64_t stream_id) const;

    std::uint64_t seed() const { return seed_value_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_value_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 finalizer; used for seed mixing.
std::uint64_t mix_u64(std::uint64_t x);

}  // namespace edgeformer
