#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace step {

/**
 * Two bits per ternary element: 00 -> 0, 01 -> +1, 10 -> -1, 11 reserved.
 * Element j lives in byte j / 4 at bit offset 2 * (j % 4) (little-element order).
 * Trailing fields of the last byte are zero and ignored on decode.
 */
struct PackedTernary {
    std::size_t length = 0;
    std::vector<std::uint8_t> bytes;

    static constexpr std::size_t bytes_for(std::size_t n) noexcept { return (n + 3) / 4; }
    bool operator==(const PackedTernary&) const = default;
};

/// Throws EncodingError on any value outside {-1, 0, +1}.
PackedTernary pack(std::span<const std::int8_t> values);

/// Throws CorruptionError on a short buffer or the reserved code 11.
std::vector<std::int8_t> unpack(const PackedTernary& packed);

}  // namespace step
