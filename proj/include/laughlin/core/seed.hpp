#pragma once

#include <cstdint>
#include <random>

namespace laughlin {

/// Seed of stream `index` (a chain, a restart), derived from the user seed.
inline std::uint64_t chain_seed(std::uint64_t seed, int index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), 0x9e3779b9u};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace laughlin
