#include "step/pattern_gen.hpp"

#include <algorithm>

namespace step {

std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::CsLbp: return "cslbp";
        case Family::Haar: return "haar";
        case Family::RandomBinary: return "random_binary";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "cslbp" || name == "cs-lbp" || name == "lbp") return Family::CsLbp;
    if (name == "haar" || name == "hsf") return Family::Haar;
    if (name == "random_binary" || name == "binary" || name == "rand") return Family::RandomBinary;
    throw ContractError("unknown kernel family '" + std::string(name) + "'");
}

TernaryKernel::TernaryKernel(int height, int width) : h(height), w(width) {
    check_kernel_shape(height, width);
    values.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0);
}

void check_kernel_shape(int h, int w) {
    if (h < 1 || w < 1) {
        throw ShapeError("kernel dimensions must be positive, got " + std::to_string(h) + "x" + std::to_string(w));
    }
}

int mirror_index(int i, int h, int w) {
    check_kernel_shape(h, w);
    const int n = h * w;
    if (i < 0 || i >= n) {
        throw ContractError("mirror_index: position " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
    }
    return n - 1 - i;
}

TernaryKernel render_haar(int h, int w, const HaarParams& params) {
    TernaryKernel k(h, w);
    for (const auto& r : params.rects) {
        if (r.row < 0 || r.row >= h || r.col < 0 || r.col >= w || r.ext_h < 0 || r.ext_w < 0) {
            throw ContractError("render_haar: rectangle anchor outside kernel");
        }
        if (r.sign != 1 && r.sign != -1) throw ContractError("render_haar: rectangle sign must be +-1");
        const int last_row = std::min(r.row + r.ext_h, h - 1);
        const int last_col = std::min(r.col + r.ext_w, w - 1);
        for (int y = r.row; y <= last_row; ++y) {
            for (int x = r.col; x <= last_col; ++x) k.at(y, x) = r.sign;
        }
    }
    return k;
}

FilterBank::FilterBank(BankShape shape, Family family, std::uint64_t seed, std::uint64_t salt,
                       std::vector<std::int8_t> values, std::vector<KernelRecipe> recipes)
    : shape_(shape), family_(family), seed_(seed), salt_(salt), values_(std::move(values)), recipes_(std::move(recipes)) {
    if (shape_.h < 1 || shape_.w < 1 || shape_.k < 1 || shape_.f < 1) {
        throw ShapeError("filter bank dimensions must be positive");
    }
    if (values_.size() != shape_.element_count()) throw ShapeError("filter bank value count does not match its shape");
    if (recipes_.empty()) recipes_.resize(shape_.kernel_count());
    if (recipes_.size() != shape_.kernel_count()) throw ShapeError("filter bank recipe count does not match its shape");
    for (auto v : values_) {
        if (v < -1 || v > 1) throw EncodingError("filter bank holds a non-ternary value");
    }
}

std::int8_t FilterBank::at(int filter, int channel, int row, int col) const {
    const auto idx = ((static_cast<std::size_t>(filter) * shape_.k + channel) * shape_.h + row) * shape_.w + col;
    return values_[idx];
}

TernaryKernel FilterBank::kernel(int filter, int channel) const {
    if (filter < 0 || filter >= shape_.f || channel < 0 || channel >= shape_.k) {
        throw ContractError("FilterBank::kernel: index out of range");
    }
    TernaryKernel k(shape_.h, shape_.w);
    const auto base = (static_cast<std::size_t>(filter) * shape_.k + channel) * shape_.kernel_size();
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(base), shape_.kernel_size(), k.values.begin());
    return k;
}

std::uint64_t derive_bank_seed(std::uint64_t seed, Family family, std::uint64_t salt) noexcept {
    const std::uint64_t fam = (static_cast<std::uint64_t>(family) + 1) * 0xD1B54A32D192ED03ULL;
    return mix64(mix64(seed ^ fam) + salt);
}

FilterBank gen_filter_bank(BankShape shape, Family family, std::uint64_t seed, std::uint64_t salt) {
    if (shape.h < 1 || shape.w < 1 || shape.k < 1 || shape.f < 1) {
        throw ShapeError("gen_filter_bank: all dimensions must be >= 1");
    }
    if (family == Family::CsLbp && (shape.h % 2 == 0 || shape.w % 2 == 0)) {
        throw ShapeError("gen_filter_bank: CS-LBP banks need odd kernel sizes");
    }
    PatternRng rng(derive_bank_seed(seed, family, salt));
    std::vector<std::int8_t> values;
    values.reserve(shape.element_count());
    std::vector<KernelRecipe> recipes;
    recipes.reserve(shape.kernel_count());
    for (int fi = 0; fi < shape.f; ++fi) {
        for (int ci = 0; ci < shape.k; ++ci) {
            TernaryKernel k;
            switch (family) {
                case Family::CsLbp: {
                    CsLbpParams p;
                    k = gen_cslbp_kernel(shape.h, shape.w, rng, &p);
                    recipes.emplace_back(std::move(p));
                    break;
                }
                case Family::Haar: {
                    HaarParams p;
                    k = gen_haar_kernel(shape.h, shape.w, rng, &p);
                    recipes.emplace_back(std::move(p));
                    break;
                }
                case Family::RandomBinary:
                    k = gen_random_binary_kernel(shape.h, shape.w, rng);
                    recipes.emplace_back(std::monostate{});
                    break;
            }
            values.insert(values.end(), k.values.begin(), k.values.end());
        }
    }
    return FilterBank(shape, family, seed, salt, std::move(values), std::move(recipes));
}

double sparsity(const FilterBank& bank) {
    const auto vals = bank.values();
    if (vals.empty()) throw ContractError("sparsity: empty bank");
    const auto zeros = std::count(vals.begin(), vals.end(), std::int8_t{0});
    return static_cast<double>(zeros) / static_cast<double>(vals.size());
}

}  // namespace step
