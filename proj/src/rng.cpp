#include "thzris/rng.hpp"

#include <cmath>

#include "thzris/config.hpp"

namespace thzris {

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) { return mix64(mix64(seed) ^ mix64(tag)); }

Rng::Rng(std::uint64_t seed, Stream stream) : engine_(derive_seed(seed, static_cast<std::uint64_t>(stream))) {}

Rng::Rng(std::uint64_t raw_seed) : engine_(raw_seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::complex<double> Rng::complex_normal()
{
    const double s = std::sqrt(0.5);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

} // namespace thzris
