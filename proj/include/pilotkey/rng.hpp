#pragma once

// Per-round random streams. Each (master seed, round index, stream) triple
// seeds an independent generator, so rounds can be generated in any order
// and still reproduce bit-for-bit.

#include <cstdint>
#include <random>

#include "pilotkey/physics.hpp"

namespace pilotkey {

using Rng = std::mt19937_64;

enum class Stream : std::uint32_t {
    source = 0,   // pair source: hidden initial positions
    bob = 1,      // Bob's choices of s and delta
    oracle = 2,   // Born-statistics oracle outcomes
    channel = 3,  // intercept-resend tampering in transit
    sifting = 4,  // test-subset selection
    bell = 5,     // Bell-test setting choices and outcomes
};

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t index, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

inline Sign fair_sign(Rng& rng) {
    return (rng() >> 63) != 0 ? Sign::plus : Sign::minus;
}

/// Uniform draw in [0, 1) from the top 53 bits.
inline double unit_uniform(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// +1 with probability p_plus, else -1.
inline Sign biased_sign(Rng& rng, double p_plus) {
    return unit_uniform(rng) < p_plus ? Sign::plus : Sign::minus;
}

}  // namespace pilotkey
