#pragma once

#include <cstdint>
#include <random>

namespace latticeforge {

/// Seedable generator with implementation-independent output: the engine is
/// std::mt19937_64 (fully specified by the standard) and the uniform/normal
/// transforms are written out here rather than taken from <random>, whose
/// distributions differ between standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }
    /// Standard normal by Box-Muller; consumes two uniforms per call.
    double normal();

  private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `index` derived from a base seed:
///   mix64(base + 0x9E3779B97F4A7C15 * (index + 1)).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace latticeforge
