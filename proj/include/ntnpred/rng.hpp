#pragma once

#include <cstdint>
#include <random>

namespace ntnpred {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for stream (a, b) under a master seed. Distinct tuples give
/// statistically independent mt19937_64 streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(master) ^ (a * 0xd1b54a32d192ed03ULL)) ^ (b * 0x8cb92ba72f3d8dd7ULL));
}

// Stream tags so that datasets, validation and Monte Carlo never share a stream.
enum class Stream : std::uint64_t {
    Init = 1,
    TrainData = 2,
    ValidationData = 3,
    MonteCarlo = 4,
    HeldOut = 5,
    Misc = 6,
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t master, Stream s, std::uint64_t index)
        : engine_(derive_seed(master, static_cast<std::uint64_t>(s), index)) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal() { return normal_(engine_); }
    double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }
    std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() >> 63); }
    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ntnpred
