#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "step/dataset.hpp"

namespace step {

/// One CIFAR-10 binary record: label byte, then 1024 R, 1024 G, 1024 B bytes.
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr int kCifarSide = 32;
inline constexpr int kCifarClasses = 10;

enum class Split { Train, Test };

/// Decodes one .bin batch file; `limit` > 0 stops after that many records.
LabeledImageBatch load_cifar10_file(const std::filesystem::path& file, int limit = 0);

/**
 * Loads data_batch_1..5.bin (train) or test_batch.bin (test) from `dir`.
 * `subset` > 0 keeps the first `subset` records in file order.
 */
LabeledImageBatch load_cifar10(const std::filesystem::path& dir, Split split, int subset = 0);

/// True when every file of the split is present.
bool cifar10_present(const std::filesystem::path& dir, Split split);

/// Re-encodes sample n (pixel v -> round(v * 255)).
std::array<std::uint8_t, kCifarRecordBytes> encode_cifar10_record(const LabeledImageBatch& batch, int n);

void write_cifar10_file(const std::filesystem::path& file, const LabeledImageBatch& batch);

}  // namespace step
