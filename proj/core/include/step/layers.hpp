#pragma once

// Layer types of a STeP network. Each layer is a plain value type; the model
// holds them in a variant. Layers are templated on the scalar so the same
// network can be evaluated in double precision for gradient verification.

#include <concepts>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "step/conv.hpp"
#include "step/pattern_gen.hpp"
#include "step/tensor.hpp"

namespace step {

enum class Mode { Train, Eval, EvalQuantized };
enum class Fusion : std::uint8_t { Add = 0, Conv1x1 = 1 };

std::string_view fusion_name(Fusion f) noexcept;
Fusion parse_fusion(std::string_view name);

template <std::floating_point T>
struct Parameter {
    std::string name;
    std::vector<int> dims;
    std::vector<T> value;
    bool trainable = true;
    bool decay = true;       // receives the L2 weight-decay gradient term
    bool clamp_unit = false;  // clamped to [-1, 1] after every optimizer step

    Parameter() = default;
    Parameter(std::string n, std::vector<int> d, bool decays, bool clamp = false)
        : name(std::move(n)), dims(std::move(d)), decay(decays), clamp_unit(clamp) {
        std::size_t count = 1;
        for (int v : dims) count *= static_cast<std::size_t>(v);
        value.assign(count, T{0});
    }

    template <std::floating_point U>
    explicit Parameter(const Parameter<U>& o)
        : name(o.name), dims(o.dims), value(o.value.begin(), o.value.end()), trainable(o.trainable),
          decay(o.decay), clamp_unit(o.clamp_unit) {}

    std::size_t size() const noexcept { return value.size(); }
};

/// Per-parameter gradient buffers keyed by the model-level parameter name.
template <std::floating_point T>
using Gradients = std::map<std::string, std::vector<T>>;

/// Tensors a layer keeps from a training forward pass for its backward pass.
template <std::floating_point T>
struct LayerCache {
    Shape4 input_shape;
    std::vector<BasicTensor4<T>> saved;
};

/// Receives gradient contributions of one layer; names are layer-local.
template <std::floating_point T>
class GradSink {
public:
    GradSink(Gradients<T>& grads, std::string prefix) : grads_(grads), prefix_(std::move(prefix)) {}
    std::vector<T>& buffer(const Parameter<T>& p);

private:
    Gradients<T>& grads_;
    std::string prefix_;
};

/// Frozen ternary convolution with a single bank.
template <std::floating_point T>
struct TernaryConvLayer {
    std::shared_ptr<const FilterBank> bank;
    std::shared_ptr<const TernaryConvPlan> plan;
    ConvGeometry geom;

    TernaryConvLayer() = default;
    TernaryConvLayer(FilterBank b, ConvGeometry g);
    template <std::floating_point U>
    explicit TernaryConvLayer(const TernaryConvLayer<U>& o) : bank(o.bank), plan(o.plan), geom(o.geom) {}

    Shape4 output_shape(const Shape4& in) const;
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

/// Trainable full-precision spatial convolution (baseline twin of a STeP block).
template <std::floating_point T>
struct FloatConvLayer {
    Parameter<T> weight;  // (f, k, h, w)
    ConvGeometry geom;

    FloatConvLayer() = default;
    FloatConvLayer(int filters, int channels, int kh, int kw, ConvGeometry g);
    template <std::floating_point U>
    explicit FloatConvLayer(const FloatConvLayer<U>& o) : weight(o.weight), geom(o.geom) {}

    DenseKernels<T> kernels() const;
    Shape4 output_shape(const Shape4& in) const;
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

/// Pointwise convolution, weights (out, in), no bias.
template <std::floating_point T>
struct Conv1x1Layer {
    Parameter<T> weight;

    Conv1x1Layer() = default;
    Conv1x1Layer(int out_channels, int in_channels, bool clamp_unit, std::string name = "weight");
    template <std::floating_point U>
    explicit Conv1x1Layer(const Conv1x1Layer<U>& o) : weight(o.weight) {}

    int out_channels() const noexcept { return weight.dims[0]; }
    int in_channels() const noexcept { return weight.dims[1]; }

    Shape4 output_shape(const Shape4& in) const;
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

/**
 * Two frozen ternary branches (CS-LBP and Haar) over the same input, fused by
 * element-wise addition or by a trainable 1x1 convolution over the
 * concatenated branch outputs (2f -> f channels, CS-LBP channels first).
 */
template <std::floating_point T>
struct StepBlockLayer {
    std::shared_ptr<const FilterBank> cslbp;
    std::shared_ptr<const FilterBank> haar;
    std::shared_ptr<const TernaryConvPlan> cslbp_plan;
    std::shared_ptr<const TernaryConvPlan> haar_plan;
    ConvGeometry geom;
    Fusion fusion = Fusion::Add;
    Conv1x1Layer<T> fuse;  // used only for Fusion::Conv1x1

    StepBlockLayer() = default;
    StepBlockLayer(FilterBank cs, FilterBank hr, ConvGeometry g, Fusion f, bool clamp_fusion = true);
    template <std::floating_point U>
    explicit StepBlockLayer(const StepBlockLayer<U>& o)
        : cslbp(o.cslbp), haar(o.haar), cslbp_plan(o.cslbp_plan), haar_plan(o.haar_plan), geom(o.geom),
          fusion(o.fusion), fuse(o.fuse) {}

    int filters() const noexcept { return cslbp->shape().f; }
    Shape4 output_shape(const Shape4& in) const;
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

template <std::floating_point T>
struct BatchNormLayer {
    Parameter<T> gamma;
    Parameter<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    T eps = T(1e-5);
    T momentum = T(0.1);

    BatchNormLayer() = default;
    explicit BatchNormLayer(int channels);
    template <std::floating_point U>
    explicit BatchNormLayer(const BatchNormLayer<U>& o)
        : gamma(o.gamma), beta(o.beta), running_mean(o.running_mean.begin(), o.running_mean.end()),
          running_var(o.running_var.begin(), o.running_var.end()), eps(static_cast<T>(o.eps)),
          momentum(static_cast<T>(o.momentum)) {}

    int channels() const noexcept { return static_cast<int>(gamma.size()); }
    Shape4 output_shape(const Shape4& in) const;
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

/// Train/Eval: max(x, slope * x). EvalQuantized: negatives to 0, positives rounded half-to-even.
template <std::floating_point T>
struct LeakyReluLayer {
    T slope = T(0.01);

    LeakyReluLayer() = default;
    explicit LeakyReluLayer(T s);
    template <std::floating_point U>
    explicit LeakyReluLayer(const LeakyReluLayer<U>& o) : slope(static_cast<T>(o.slope)) {}

    Shape4 output_shape(const Shape4& in) const { return in; }
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

template <std::floating_point T>
struct AvgPoolLayer {
    int size = 2;
    int stride = 2;

    AvgPoolLayer() = default;
    AvgPoolLayer(int s, int st);
    template <std::floating_point U>
    explicit AvgPoolLayer(const AvgPoolLayer<U>& o) : size(o.size), stride(o.stride) {}

    Shape4 output_shape(const Shape4& in) const;
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

template <std::floating_point T>
struct FlattenLayer {
    FlattenLayer() = default;
    template <std::floating_point U>
    explicit FlattenLayer(const FlattenLayer<U>&) {}

    Shape4 output_shape(const Shape4& in) const { return {in.n, in.c * in.h * in.w, 1, 1}; }
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

/// Fully connected layer over the flattened sample; output (n, out, 1, 1).
template <std::floating_point T>
struct DenseLayer {
    Parameter<T> weight;  // (out, in)
    Parameter<T> bias;    // (out)

    DenseLayer() = default;
    DenseLayer(int in_features, int out_features);
    template <std::floating_point U>
    explicit DenseLayer(const DenseLayer<U>& o) : weight(o.weight), bias(o.bias) {}

    int in_features() const noexcept { return weight.dims[1]; }
    int out_features() const noexcept { return weight.dims[0]; }
    Shape4 output_shape(const Shape4& in) const;
    BasicTensor4<T> forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache);
    BasicTensor4<T> backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache, GradSink<T>& sink) const;
};

/// Visits every Parameter of a layer (const or mutable) in a fixed order.
template <class Layer, class F>
void for_each_parameter(Layer& layer, F&& fn) {
    if constexpr (requires { layer.gamma; }) {
        fn(layer.gamma);
        fn(layer.beta);
    } else if constexpr (requires { layer.bias; }) {
        fn(layer.weight);
        fn(layer.bias);
    } else if constexpr (requires { layer.fuse; }) {
        if (layer.fusion == Fusion::Conv1x1) fn(layer.fuse.weight);
    } else if constexpr (requires { layer.weight; }) {
        fn(layer.weight);
    }
}

}  // namespace step
