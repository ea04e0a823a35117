#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "step/model.hpp"

namespace step {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 24;  // magic, version, hash, payload length

struct LoadedCheckpoint {
    ModelGraph<float> model;
    std::uint64_t trained_epochs = 0;
};

/// Canonical "STPC" v1 bytes (see docs/formats.md). Equal models give equal bytes.
std::vector<std::uint8_t> encode_checkpoint(const ModelGraph<float>& model, std::uint64_t trained_epochs = 0);

/// Throws FormatError on magic/version mismatch, CorruptionError on hash mismatch or truncation.
LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Atomic write (temporary file, then rename).
void save_checkpoint(const ModelGraph<float>& model, const std::filesystem::path& path,
                     std::uint64_t trained_epochs = 0);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace step
