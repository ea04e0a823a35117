#include "step/cifar10.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "step/error.hpp"
#include "step/io.hpp"

namespace step {

namespace {

std::vector<std::filesystem::path> split_files(const std::filesystem::path& dir, Split split) {
    if (split == Split::Test) return {dir / "test_batch.bin"};
    std::vector<std::filesystem::path> files;
    for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    return files;
}

void decode_records(const std::vector<std::uint8_t>& raw, const std::string& name, int limit,
                    LabeledImageBatch& out, int& filled) {
    if (raw.size() % kCifarRecordBytes != 0) {
        throw FormatError(name + ": size " + std::to_string(raw.size()) + " is not a multiple of " +
                          std::to_string(kCifarRecordBytes) + " (truncated record)");
    }
    const auto records = static_cast<int>(raw.size() / kCifarRecordBytes);
    const int take = limit > 0 ? std::min(records, limit) : records;
    constexpr std::size_t pixels = kCifarRecordBytes - 1;
    for (int r = 0; r < take; ++r) {
        const std::uint8_t* rec = raw.data() + static_cast<std::size_t>(r) * kCifarRecordBytes;
        if (rec[0] >= kCifarClasses) {
            throw FormatError(name + ": record " + std::to_string(r) + " has label " + std::to_string(rec[0]));
        }
        out.labels.push_back(rec[0]);
        float* dst = out.images.sample(filled);
        for (std::size_t i = 0; i < pixels; ++i) dst[i] = static_cast<float>(rec[1 + i]) / 255.0f;
        ++filled;
    }
}

}  // namespace

LabeledImageBatch load_cifar10_file(const std::filesystem::path& file, int limit) {
    const auto raw = read_file(file);
    const auto records = static_cast<int>(raw.size() / kCifarRecordBytes);
    const int n = limit > 0 ? std::min(records, limit) : records;
    LabeledImageBatch out;
    out.images = Tensor4({n, 3, kCifarSide, kCifarSide});
    out.labels.reserve(static_cast<std::size_t>(n));
    int filled = 0;
    decode_records(raw, file.string(), n, out, filled);
    return out;
}

bool cifar10_present(const std::filesystem::path& dir, Split split) {
    const auto files = split_files(dir, split);
    return std::all_of(files.begin(), files.end(), [](const auto& f) { return std::filesystem::is_regular_file(f); });
}

LabeledImageBatch load_cifar10(const std::filesystem::path& dir, Split split, int subset) {
    std::vector<LabeledImageBatch> parts;
    int total = 0;
    for (const auto& f : split_files(dir, split)) {
        if (subset > 0 && total >= subset) break;
        if (!std::filesystem::is_regular_file(f)) throw IoError("missing CIFAR-10 file " + f.string());
        parts.push_back(load_cifar10_file(f, subset > 0 ? subset - total : 0));
        total += parts.back().size();
    }
    LabeledImageBatch out;
    out.images = Tensor4({total, 3, kCifarSide, kCifarSide});
    out.labels.reserve(static_cast<std::size_t>(total));
    int at = 0;
    for (const auto& p : parts) {
        std::copy(p.images.data().begin(), p.images.data().end(), out.images.sample(at));
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
        at += p.size();
    }
    return out;
}

std::array<std::uint8_t, kCifarRecordBytes> encode_cifar10_record(const LabeledImageBatch& batch, int n) {
    const auto& s = batch.images.shape();
    if (s.c != 3 || s.h != kCifarSide || s.w != kCifarSide) throw ShapeError("CIFAR-10 records are 3x32x32");
    if (n < 0 || n >= batch.size()) throw ContractError("encode_cifar10_record: index out of range");
    const int label = batch.labels[static_cast<std::size_t>(n)];
    if (label < 0 || label >= kCifarClasses) throw FormatError("label outside [0, 10)");
    std::array<std::uint8_t, kCifarRecordBytes> rec{};
    rec[0] = static_cast<std::uint8_t>(label);
    const float* src = batch.images.sample(n);
    for (std::size_t i = 0; i + 1 < kCifarRecordBytes; ++i) {
        const float v = std::clamp(src[i], 0.0f, 1.0f);
        rec[1 + i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return rec;
}

void write_cifar10_file(const std::filesystem::path& file, const LabeledImageBatch& batch) {
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(batch.size()) * kCifarRecordBytes);
    for (int n = 0; n < batch.size(); ++n) {
        const auto rec = encode_cifar10_record(batch, n);
        out.insert(out.end(), rec.begin(), rec.end());
    }
    write_file_atomic(file, out);
}

}  // namespace step
