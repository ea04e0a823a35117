#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "step/pattern_gen.hpp"

namespace step {

/// Bank blob header: "STEP", version, h/w/k/f as u32 LE, family, seed u64 LE. Packed bits follow.
inline constexpr std::uint8_t kBankBlobVersion = 1;
inline constexpr std::size_t kBankBlobHeaderBytes = 30;

std::vector<std::uint8_t> encode_bank_blob(const FilterBank& bank);
/// The blob does not carry the layer salt; pass it when known (descriptor or checkpoint).
FilterBank decode_bank_blob(std::span<const std::uint8_t> blob, std::uint64_t salt = 0);

/// JSON descriptor: shape, family, seed, salt, blob file name and per-kernel generation records.
std::string bank_descriptor_json(const FilterBank& bank, const std::string& blob_name, int indent = 2);

/// Writes `blob_path` and `blob_path` + ".json".
void save_bank(const FilterBank& bank, const std::filesystem::path& blob_path);

/// Reads a blob; when `<blob>.json` exists its salt and generation records are attached
/// after checking that shape, family and seed agree.
FilterBank load_bank(const std::filesystem::path& blob_path);

/// One binary PGM per (filter, channel) named f{i}_c{j}.pgm; -1 -> 0, 0 -> 128, +1 -> 255.
std::vector<std::filesystem::path> export_kernels_pgm(const FilterBank& bank, const std::filesystem::path& dir);

/// Inverse of the PGM mapping. Throws FormatError on other gray levels.
TernaryKernel read_kernel_pgm(const std::filesystem::path& file);

}  // namespace step
