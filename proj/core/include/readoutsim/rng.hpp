#pragma once

#include <cstdint>
#include <random>

namespace rsim {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Key of an independent random stream. Every shot, GA individual or RB
/// sequence draws from its own stream, so results do not depend on the
/// order or thread in which work items run.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return Engine(stream_key(seed, stream, index));
}

/// Stream tags. Values are part of the reproducibility contract.
namespace streams {
inline constexpr std::uint64_t shots = 0x5107;
inline constexpr std::uint64_t calibration = 0xca1b;
inline constexpr std::uint64_t qnd = 0x0bd0;
inline constexpr std::uint64_t postselect = 0x9057;
inline constexpr std::uint64_t rb = 0x0eb0;
inline constexpr std::uint64_t ga_operators = 0x6a00;
inline constexpr std::uint64_t ga_fitness = 0x6af1;
inline constexpr std::uint64_t ga_final = 0x6aff;
}  // namespace streams

}  // namespace rsim
