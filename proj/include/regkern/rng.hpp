#pragma once

#include <cstdint>
#include <random>

namespace regkern {

/// One step of the splitmix64 sequence: advances `state` and returns a
/// well-mixed 64-bit value. Used to derive independent deterministic streams
/// from (seed, work item) coordinates without correlation between streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic stream key for work item (a, b) under a base seed. Equal
/// inputs give equal keys on every platform; distinct inputs give
/// decorrelated keys.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// A Mersenne-twister engine seeded from derive_stream(seed, a, b).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace regkern
