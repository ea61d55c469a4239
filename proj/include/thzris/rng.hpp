#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace thzris {

// Independent sub-streams derived from one 64-bit scenario seed.
enum class Stream : std::uint64_t
{
    geometry = 1, // user offsets
    angles = 2,   // per-link path angles
    init = 3,     // optimizer starting phases
    baseline = 4, // RND-ARIS phases
    validate = 5, // random instances of the invariant suite
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed of sub-stream `tag` under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// mt19937_64 seeded through mix64; doubles are built from the top 53 bits so
// the sequence does not depend on the standard library's distributions.
class Rng
{
  public:
    Rng(std::uint64_t seed, Stream stream);
    explicit Rng(std::uint64_t raw_seed);

    double uniform(); // [0, 1)
    double uniform(double lo, double hi);
    double normal(); // Box-Muller
    std::complex<double> complex_normal(); // CN(0, 1)
    std::uint64_t next() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

} // namespace thzris
