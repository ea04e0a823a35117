#pragma once

#include <cstdint>
#include <span>

namespace step {

/// SplitMix64 finalizer. Used both as the generator step and to derive sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * Portable deterministic generator for kernel generation and data shuffling.
 *
 * The stream is SplitMix64: state advances by 0x9E3779B97F4A7C15 and each
 * output is mix64(state). Integer ranges are drawn by rejection sampling on the
 * raw 64-bit output, so the same seed yields the same draws on every platform
 * and compiler. Never share one instance between threads.
 */
class PatternRng {
public:
    explicit constexpr PatternRng(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

    constexpr std::uint64_t seed() const noexcept { return seed_; }

    constexpr std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform integer on the inclusive range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform draw from an explicit non-empty set.
    template <class T>
    T from_set(std::span<const T> values) {
        const auto idx = uniform_int(0, static_cast<std::int64_t>(values.size()) - 1);
        return values[static_cast<std::size_t>(idx)];
    }

    /// Uniform double on [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (one value per call; the pair's second half is discarded).
    double normal();

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

}  // namespace step
