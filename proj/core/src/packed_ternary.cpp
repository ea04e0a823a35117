#include "step/packed_ternary.hpp"

#include <string>

#include "step/error.hpp"

namespace step {

namespace {

constexpr std::uint8_t kZero = 0b00;
constexpr std::uint8_t kPlus = 0b01;
constexpr std::uint8_t kMinus = 0b10;

}  // namespace

PackedTernary pack(std::span<const std::int8_t> values) {
    PackedTernary out;
    out.length = values.size();
    out.bytes.assign(PackedTernary::bytes_for(values.size()), 0);
    for (std::size_t j = 0; j < values.size(); ++j) {
        std::uint8_t code = kZero;
        switch (values[j]) {
            case 0: code = kZero; break;
            case 1: code = kPlus; break;
            case -1: code = kMinus; break;
            default:
                throw EncodingError("pack: element " + std::to_string(j) + " is " + std::to_string(values[j]) +
                                    ", not ternary");
        }
        out.bytes[j / 4] |= static_cast<std::uint8_t>(code << (2 * (j % 4)));
    }
    return out;
}

std::vector<std::int8_t> unpack(const PackedTernary& packed) {
    if (packed.bytes.size() < PackedTernary::bytes_for(packed.length)) {
        throw CorruptionError("unpack: buffer too short for " + std::to_string(packed.length) + " elements");
    }
    std::vector<std::int8_t> out(packed.length);
    for (std::size_t j = 0; j < packed.length; ++j) {
        const auto code = static_cast<std::uint8_t>((packed.bytes[j / 4] >> (2 * (j % 4))) & 0b11);
        switch (code) {
            case kZero: out[j] = 0; break;
            case kPlus: out[j] = 1; break;
            case kMinus: out[j] = -1; break;
            default: throw CorruptionError("unpack: reserved code 11 at element " + std::to_string(j));
        }
    }
    return out;
}

}  // namespace step
