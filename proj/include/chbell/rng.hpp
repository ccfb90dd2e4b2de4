#pragma once

#include <cstdint>
#include <random>

namespace chbell {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used only to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for (seed, stream, task). Equal arguments always give
// the same sequence, so tasks can run in any order or on any thread.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t task = 0) {
    return Rng(mix64(mix64(mix64(seed) ^ stream) ^ task));
}

} // namespace chbell
