#ifndef SPI_RNG_HPP
#define SPI_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace spi {

// Streams are std::mt19937_64 engines (output fully specified by the C++
// standard) seeded through a SplitMix64 mix of (seed, domain, stream). The
// uniform conversions below are written out explicitly because the standard
// distributions are implementation-defined, and datasets must be identical
// across toolchains.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64-seed/53bit-uniform";

/// Domains keep dataset draws and chain draws independent even for equal seeds.
enum class StreamDomain : std::uint64_t {
    dataset = 0x64617461ULL,
    chain = 0x636861696eULL,
    sweep = 0x7377656570ULL,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    using result_type = std::uint64_t;

    Rng(std::uint64_t seed, StreamDomain domain, std::uint64_t stream = 0)
        : engine_(derive_seed(seed, domain, stream))
    {
    }

    static constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamDomain domain,
                                               std::uint64_t stream) noexcept
    {
        auto h = splitmix64(seed);
        h = splitmix64(h ^ static_cast<std::uint64_t>(domain));
        return splitmix64(h ^ splitmix64(stream));
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform()
    {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, bound) by rejection, unbiased. bound must be > 0.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
            - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

    /// Standard normal via Box-Muller; one value per call.
    double normal()
    {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace spi

#endif
