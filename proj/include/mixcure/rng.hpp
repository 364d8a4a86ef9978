#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mixcure {

using Rng = std::mt19937_64;

// Purpose tags for derived streams, so that e.g. bootstrap resampling never
// shares draws with data generation for the same replicate.
enum class StreamTag : std::uint64_t {
    Data = 1,
    Calibration = 2,
    Bootstrap = 3,
    Replicate = 4,
    Evaluation = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Hashes a root seed and a path of indices into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = splitmix64(seed);
    for (auto p : path) {
        h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    }
    return h;
}

inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0)
{
    return Rng(derive_seed(seed, {static_cast<std::uint64_t>(tag), index}));
}

}  // namespace mixcure
