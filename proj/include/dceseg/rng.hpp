#pragma once

#include <cmath>
#include <cstdint>

namespace dceseg {

// Counter-based generator: every (stream, counter) cell is an independent
// draw, so parallel generation is order-independent and a seeded run is
// reproducible byte-for-byte.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1].
    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        return to_unit(word(stream, counter, 0));
    }

    // Standard normal via Box-Muller on two independent words.
    double normal(std::uint64_t stream, std::uint64_t counter) const {
        const double u1 = to_unit(word(stream, counter, 0));
        const double u2 = to_unit(word(stream, counter, 1));
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t key_;

    std::uint64_t word(std::uint64_t stream, std::uint64_t counter, std::uint64_t lane) const {
        std::uint64_t s = key_;
        s += stream * 0xbf58476d1ce4e5b9ull;
        s += counter * 0x94d049bb133111ebull;
        s += lane * 0xd1b54a32d192ed03ull;
        return mix(s);
    }

    static double to_unit(std::uint64_t w) {
        // 53-bit mantissa, shifted into (0,1].
        return (double((w >> 11) + 1)) * 0x1.0p-53;
    }
};

}  // namespace dceseg
