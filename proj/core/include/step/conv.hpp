#pragma once

// Convolution engines. Everything here is cross-correlation (no kernel flip)
// with symmetric zero padding and dilation 1.
//
// Accumulation order per output element is fixed: input channel outermost,
// then kernel row, then kernel column. Both the float reference and the
// ternary path follow it, which makes their outputs bit-identical.

#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "step/packed_ternary.hpp"
#include "step/pattern_gen.hpp"
#include "step/tensor.hpp"

namespace step {

struct ConvGeometry {
    int stride = 1;
    int padding = 0;

    /// floor((in + 2 * padding - kernel) / stride) + 1; throws ShapeError when < 1.
    int output_dim(int in, int kernel) const;
    bool operator==(const ConvGeometry&) const = default;
};

Shape4 conv_output_shape(const Shape4& in, int filters, int kh, int kw, const ConvGeometry& g);

/// Scalar operation tally of an instrumented run.
struct OpCounts {
    std::uint64_t mults = 0;
    std::uint64_t adds = 0;  // additions and subtractions
};

/// Dense (f, k, h, w) weights for the float reference path and trainable spatial convs.
template <std::floating_point T>
struct DenseKernels {
    int f = 0;
    int k = 0;
    int h = 0;
    int w = 0;
    std::vector<T> values;

    DenseKernels() = default;
    DenseKernels(int filters, int channels, int height, int width)
        : f(filters), k(channels), h(height), w(width),
          values(static_cast<std::size_t>(filters) * channels * height * width, T{0}) {}

    T at(int fo, int c, int y, int x) const noexcept {
        return values[((static_cast<std::size_t>(fo) * k + c) * h + y) * w + x];
    }
};

/// Decoded bank as float weights (the input of the reference path).
template <std::floating_point T>
DenseKernels<T> decode_bank(const FilterBank& bank);

/// Bank shape plus its 2-bit packed values.
struct PackedBank {
    BankShape shape;
    PackedTernary bits;
};

PackedBank pack_bank(const FilterBank& bank);

/**
 * Sign-dispatch program for one ternary bank: per filter, the non-zero taps in
 * accumulation order. Built once per layer from the packed bits.
 */
class TernaryConvPlan {
public:
    struct Tap {
        int channel;
        int ky;
        int kx;
        std::int8_t sign;
    };

    TernaryConvPlan() = default;
    explicit TernaryConvPlan(const PackedBank& bank);
    explicit TernaryConvPlan(const FilterBank& bank) : TernaryConvPlan(pack_bank(bank)) {}

    const BankShape& shape() const noexcept { return shape_; }
    std::span<const Tap> taps(int filter) const noexcept {
        return {taps_.data() + offsets_[static_cast<std::size_t>(filter)],
                offsets_[static_cast<std::size_t>(filter) + 1] - offsets_[static_cast<std::size_t>(filter)]};
    }
    std::size_t nonzero_count() const noexcept { return taps_.size(); }

private:
    BankShape shape_;
    std::vector<Tap> taps_;
    std::vector<std::size_t> offsets_;
};

template <std::floating_point T>
BasicTensor4<T> conv2d_reference(const BasicTensor4<T>& input, const DenseKernels<T>& weights,
                                 const ConvGeometry& geom);

/// Same computation with every scalar multiply and add tallied (single-threaded).
BasicTensor4<float> conv2d_reference_counted(const BasicTensor4<float>& input, const DenseKernels<float>& weights,
                                             const ConvGeometry& geom, OpCounts& counts);

/// Multiplier-free path: +1 adds, -1 subtracts, 0 is skipped.
template <std::floating_point T>
BasicTensor4<T> conv2d_ternary(const BasicTensor4<T>& input, const TernaryConvPlan& plan, const ConvGeometry& geom);

template <std::floating_point T>
BasicTensor4<T> conv2d_ternary(const BasicTensor4<T>& input, const PackedBank& bank, const ConvGeometry& geom) {
    return conv2d_ternary(input, TernaryConvPlan(bank), geom);
}

BasicTensor4<float> conv2d_ternary_counted(const BasicTensor4<float>& input, const TernaryConvPlan& plan,
                                           const ConvGeometry& geom, OpCounts& counts);

/// Gradient w.r.t. the input of conv2d_ternary (transposed convolution), multiplier-free.
template <std::floating_point T>
BasicTensor4<T> conv2d_input_grad(const BasicTensor4<T>& out_grad, const TernaryConvPlan& plan,
                                  const ConvGeometry& geom, const Shape4& input_shape);

template <std::floating_point T>
BasicTensor4<T> conv2d_input_grad(const BasicTensor4<T>& out_grad, const PackedBank& bank, const ConvGeometry& geom,
                                  const Shape4& input_shape) {
    return conv2d_input_grad(out_grad, TernaryConvPlan(bank), geom, input_shape);
}

BasicTensor4<float> conv2d_input_grad_counted(const BasicTensor4<float>& out_grad, const TernaryConvPlan& plan,
                                              const ConvGeometry& geom, const Shape4& input_shape, OpCounts& counts);

/// Input gradient of the dense reference convolution.
template <std::floating_point T>
BasicTensor4<T> conv2d_reference_input_grad(const BasicTensor4<T>& out_grad, const DenseKernels<T>& weights,
                                            const ConvGeometry& geom, const Shape4& input_shape);

/// Weight gradient of the dense reference convolution, summed over the batch in sample order.
template <std::floating_point T>
DenseKernels<T> conv2d_reference_weight_grad(const BasicTensor4<T>& input, const BasicTensor4<T>& out_grad,
                                             int kh, int kw, const ConvGeometry& geom);

}  // namespace step
