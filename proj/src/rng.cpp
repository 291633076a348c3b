#include "regkern/rng.hpp"

namespace regkern {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = seed;
    std::uint64_t key = splitmix64(state);
    state ^= a + 0x632BE59BD9B4E019ULL;
    key ^= splitmix64(state);
    state ^= b + 0x9E6C63D0876A9ED5ULL;
    key ^= splitmix64(state);
    return key;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return std::mt19937_64(derive_stream(seed, a, b));
}

}  // namespace regkern
