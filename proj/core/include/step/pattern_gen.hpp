#pragma once

// Structured ternary kernel generation: center-symmetric LBP pairs, rectangular
// Haar features and a random {-1,+1} baseline.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "step/error.hpp"
#include "step/rng.hpp"

namespace step {

enum class Family : std::uint8_t { CsLbp = 0, Haar = 1, RandomBinary = 2 };

std::string_view family_name(Family f) noexcept;
/// Accepts "cslbp", "haar", "random_binary" (also "binary", "rand").
Family parse_family(std::string_view name);

/// One h x w kernel over {-1, 0, +1}, row-major.
struct TernaryKernel {
    int h = 0;
    int w = 0;
    std::vector<std::int8_t> values;

    TernaryKernel() = default;
    TernaryKernel(int height, int width);

    std::int8_t& at(int row, int col) { return values[static_cast<std::size_t>(row * w + col)]; }
    std::int8_t at(int row, int col) const { return values[static_cast<std::size_t>(row * w + col)]; }
    std::size_t size() const noexcept { return values.size(); }

    bool operator==(const TernaryKernel&) const = default;
};

/// Activated pairs of a CS-LBP kernel. Pair i occupies flat positions i and mirror(i).
struct CsLbpParams {
    int num_pairs = 0;                    // floor(h*w/2)
    int length = 0;                       // activated pairs, <= min(4, num_pairs)
    std::vector<std::int8_t> pair_signs;  // one sign per activated pair

    bool operator==(const CsLbpParams&) const = default;
};

struct HaarRect {
    int row = 0;
    int col = 0;
    int ext_h = 0;  // covers rows row..row+ext_h (clamped)
    int ext_w = 0;
    std::int8_t sign = 1;

    bool operator==(const HaarRect&) const = default;
};

struct HaarParams {
    std::vector<HaarRect> rects;  // applied in order, later ones overwrite

    bool operator==(const HaarParams&) const = default;
};

using KernelRecipe = std::variant<std::monostate, CsLbpParams, HaarParams>;

/// Anything that can produce inclusive uniform integer draws.
template <class R>
concept DrawSource = requires(R& r, std::int64_t v) {
    { r.uniform_int(v, v) } -> std::convertible_to<std::int64_t>;
};

/// Point reflection through the kernel center: h*w - 1 - i.
int mirror_index(int i, int h, int w);

void check_kernel_shape(int h, int w);

template <DrawSource R>
TernaryKernel gen_cslbp_kernel(int h, int w, R& rng, CsLbpParams* record = nullptr) {
    check_kernel_shape(h, w);
    if (h % 2 == 0 || w % 2 == 0) {
        throw ShapeError("CS-LBP kernels need odd height and width, got " + std::to_string(h) + "x" +
                         std::to_string(w));
    }
    TernaryKernel k(h, w);
    const int pairs = (h * w) / 2;
    const auto length = static_cast<int>(rng.uniform_int(0, std::min(4, pairs)));
    CsLbpParams params{pairs, length, {}};
    for (int i = 0; i < length; ++i) {
        const auto s = static_cast<std::int8_t>(rng.uniform_int(-1, 1));
        k.values[static_cast<std::size_t>(i)] = s;
        k.values[static_cast<std::size_t>(mirror_index(i, h, w))] = static_cast<std::int8_t>(-s);
        params.pair_signs.push_back(s);
    }
    if (record) *record = std::move(params);
    return k;
}

/// Paints rectangles onto a zero grid, clamping each to the kernel bounds.
TernaryKernel render_haar(int h, int w, const HaarParams& params);

template <DrawSource R>
TernaryKernel gen_haar_kernel(int h, int w, R& rng, HaarParams* record = nullptr) {
    check_kernel_shape(h, w);
    HaarParams params;
    const auto count = rng.uniform_int(1, 4);
    for (std::int64_t i = 0; i < count; ++i) {
        HaarRect r;
        r.row = static_cast<int>(rng.uniform_int(0, h - 1));
        r.col = static_cast<int>(rng.uniform_int(0, w - 1));
        r.ext_h = static_cast<int>(rng.uniform_int(0, h - 1));
        r.ext_w = static_cast<int>(rng.uniform_int(0, w - 1));
        r.sign = static_cast<std::int8_t>(rng.uniform_int(0, 1) * 2 - 1);
        params.rects.push_back(r);
    }
    TernaryKernel k = render_haar(h, w, params);
    if (record) *record = std::move(params);
    return k;
}

template <DrawSource R>
TernaryKernel gen_random_binary_kernel(int h, int w, R& rng) {
    check_kernel_shape(h, w);
    TernaryKernel k(h, w);
    for (auto& v : k.values) v = static_cast<std::int8_t>(rng.uniform_int(0, 1) * 2 - 1);
    return k;
}

/// (h, w, k, f): kernel height, width, input channels, output filters.
struct BankShape {
    int h = 0;
    int w = 0;
    int k = 0;
    int f = 0;

    std::size_t kernel_size() const noexcept { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
    std::size_t kernel_count() const noexcept { return static_cast<std::size_t>(k) * static_cast<std::size_t>(f); }
    std::size_t element_count() const noexcept { return kernel_size() * kernel_count(); }

    bool operator==(const BankShape&) const = default;
};

/**
 * Frozen ternary weights for one convolution layer.
 *
 * Values are stored flat in (f, k, h, w) order: filter-major, then input
 * channel, then the kernel in row-major order. That is also the generation
 * order, the packed blob order and the order the convolution engines read.
 */
class FilterBank {
public:
    FilterBank() = default;
    FilterBank(BankShape shape, Family family, std::uint64_t seed, std::uint64_t salt,
               std::vector<std::int8_t> values, std::vector<KernelRecipe> recipes = {});

    const BankShape& shape() const noexcept { return shape_; }
    Family family() const noexcept { return family_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t salt() const noexcept { return salt_; }

    std::span<const std::int8_t> values() const noexcept { return values_; }
    std::int8_t at(int filter, int channel, int row, int col) const;
    TernaryKernel kernel(int filter, int channel) const;

    /// Generation record per kernel (empty variant when loaded from a bare blob).
    const std::vector<KernelRecipe>& recipes() const noexcept { return recipes_; }

    bool same_weights(const FilterBank& other) const noexcept {
        return shape_ == other.shape_ && values_ == other.values_;
    }

private:
    BankShape shape_;
    Family family_ = Family::CsLbp;
    std::uint64_t seed_ = 0;
    std::uint64_t salt_ = 0;
    std::vector<std::int8_t> values_;
    std::vector<KernelRecipe> recipes_;
};

/// Seed of the single generator used for a bank; mixes family and layer-position salt.
std::uint64_t derive_bank_seed(std::uint64_t seed, Family family, std::uint64_t salt) noexcept;

FilterBank gen_filter_bank(BankShape shape, Family family, std::uint64_t seed, std::uint64_t salt = 0);

/// Fraction of zero elements.
double sparsity(const FilterBank& bank);

}  // namespace step
