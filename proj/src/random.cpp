#include "sdwave/random.hpp"

#include <cmath>
#include <numbers>

namespace sdwave {

namespace {

constexpr std::uint32_t kMultiplier0 = 0xD2511F53;
constexpr std::uint32_t kMultiplier1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(product);
    hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kMultiplier0, c[0], lo0, hi0);
        mulhilo(kMultiplier1, c[2], lo1, hi1);
        c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
    }
    return c;
}

double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

namespace {

inline std::array<double, 2> box_muller(const PhiloxCounter& w) noexcept {
    const double u1 = to_open_unit(w[0], w[1]);
    const double u2 = to_open_unit(w[2], w[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

std::array<double, 3> standard_normals(const NoiseKey& key) noexcept {
    const PhiloxKey k{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
    // Counter words: mode, step, sample, and (block | high bits of step).
    // The step high bits share the last word with the block index.
    const auto step_lo = static_cast<std::uint32_t>(key.step);
    const auto step_hi = static_cast<std::uint32_t>(key.step >> 32);
    const auto sample = static_cast<std::uint32_t>(key.sample);
    const auto first = box_muller(philox4x32({key.mode, step_lo, sample, step_hi << 1}, k));
    const auto second = box_muller(philox4x32({key.mode, step_lo, sample, (step_hi << 1) | 1u}, k));
    return {first[0], first[1], second[0]};
}

}  // namespace sdwave
