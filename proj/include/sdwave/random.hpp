#pragma once

// Counter-based normal variates. Every draw is a pure function of
// (seed, sample, step, mode), so Monte-Carlo paths do not depend on how
// samples are scheduled across threads.

#include <array>
#include <cstdint>

namespace sdwave {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) noexcept;

struct NoiseKey {
    std::uint64_t seed = 0;
    std::uint64_t sample = 0;
    std::uint64_t step = 0;
    std::uint32_t mode = 0;
};

/// Uniform in the open interval (0, 1) from 64 random bits (the top 52 are used, so the largest value stays below 1).
double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept;

/// Three independent standard normals for one key (two Philox blocks,
/// Box-Muller on each 128-bit output).
std::array<double, 3> standard_normals(const NoiseKey& key) noexcept;

}  // namespace sdwave
