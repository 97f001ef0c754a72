#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fogsim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to turn structured keys into well-mixed seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent sub-seed from a master seed and a key path.
///
/// derive_seed(m, {a, b}) == splitmix64(splitmix64(m ^ a') ^ b') with each key
/// pre-mixed, so distinct key paths give unrelated streams and adding a new
/// key path never shifts existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept
{
    std::uint64_t h = splitmix64(master);
    for (auto k : keys) {
        h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t arrivals = 1;
inline constexpr std::uint64_t policy = 2;
inline constexpr std::uint64_t triggers = 3;
inline constexpr std::uint64_t service = 4;
inline constexpr std::uint64_t topology = 5;
inline constexpr std::uint64_t run = 6;
} // namespace stream

} // namespace fogsim
