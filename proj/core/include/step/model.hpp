#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "step/layers.hpp"

namespace step {

enum class LayerKind : std::uint8_t {
    TernaryConv = 1,
    FloatConv = 2,
    Conv1x1 = 3,
    StepBlock = 4,
    BatchNorm = 5,
    LeakyRelu = 6,
    AvgPool = 7,
    Flatten = 8,
    Dense = 9,
};

std::string_view layer_kind_name(LayerKind k) noexcept;

template <std::floating_point T>
using LayerNode = std::variant<TernaryConvLayer<T>, FloatConvLayer<T>, Conv1x1Layer<T>, StepBlockLayer<T>,
                               BatchNormLayer<T>, LeakyReluLayer<T>, AvgPoolLayer<T>, FlattenLayer<T>, DenseLayer<T>>;

template <std::floating_point T>
LayerKind kind_of(const LayerNode<T>& node) noexcept {
    return static_cast<LayerKind>(node.index() + 1);
}

template <std::floating_point T>
struct ForwardCache {
    std::uint64_t model_version = 0;
    const void* model = nullptr;
    Shape4 input_shape;
    std::vector<LayerCache<T>> layers;
};

/**
 * Sequential network. The input shape's batch field is ignored; only (c, h, w)
 * are enforced. `version` changes whenever parameters are updated so a cache
 * from an older forward pass is rejected by backward().
 */
template <std::floating_point T>
class ModelGraph {
public:
    ModelGraph() = default;
    ModelGraph(Shape4 input_shape, int num_classes) : input_shape_(input_shape), num_classes_(num_classes) {}

    template <std::floating_point U>
    ModelGraph<U> cast() const;

    const Shape4& input_shape() const noexcept { return input_shape_; }
    int num_classes() const noexcept { return num_classes_; }

    std::vector<LayerNode<T>>& layers() noexcept { return layers_; }
    const std::vector<LayerNode<T>>& layers() const noexcept { return layers_; }
    void add(LayerNode<T> layer) { layers_.push_back(std::move(layer)); }

    /// Static shape walk for a batch of n; throws ShapeError naming the first layer that breaks.
    std::vector<Shape4> shape_walk(int n = 1) const;
    void validate() const;

    /// Model-level parameter key: "<layer index>.<parameter name>".
    static std::string param_key(std::size_t layer, const std::string& name) {
        return std::to_string(layer) + "." + name;
    }

    template <class F>
    void for_each_param(F&& fn) {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            std::visit([&](auto& layer) { for_each_parameter(layer, [&](Parameter<T>& p) { fn(param_key(i, p.name), p); }); },
                       layers_[i]);
        }
    }
    template <class F>
    void for_each_param(F&& fn) const {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            std::visit([&](const auto& layer) {
                for_each_parameter(layer, [&](const Parameter<T>& p) { fn(param_key(i, p.name), p); });
            }, layers_[i]);
        }
    }

    /// Frozen banks in layer order (a STeP block contributes CS-LBP then Haar).
    std::vector<const FilterBank*> frozen_banks() const;

    std::uint64_t version() const noexcept { return version_; }
    void mark_updated() noexcept { ++version_; }

    /// Free-form provenance (the architecture config echo stored in checkpoints).
    std::string config_echo;

private:
    Shape4 input_shape_;
    int num_classes_ = 0;
    std::vector<LayerNode<T>> layers_;
    std::uint64_t version_ = 0;
};

template <std::floating_point T>
template <std::floating_point U>
ModelGraph<U> ModelGraph<T>::cast() const {
    ModelGraph<U> out(input_shape_, num_classes_);
    for (const auto& node : layers_) {
        std::visit([&](const auto& layer) {
            using Src = std::decay_t<decltype(layer)>;
            if constexpr (std::is_same_v<Src, TernaryConvLayer<T>>) out.add(TernaryConvLayer<U>(layer));
            else if constexpr (std::is_same_v<Src, FloatConvLayer<T>>) out.add(FloatConvLayer<U>(layer));
            else if constexpr (std::is_same_v<Src, Conv1x1Layer<T>>) out.add(Conv1x1Layer<U>(layer));
            else if constexpr (std::is_same_v<Src, StepBlockLayer<T>>) out.add(StepBlockLayer<U>(layer));
            else if constexpr (std::is_same_v<Src, BatchNormLayer<T>>) out.add(BatchNormLayer<U>(layer));
            else if constexpr (std::is_same_v<Src, LeakyReluLayer<T>>) out.add(LeakyReluLayer<U>(layer));
            else if constexpr (std::is_same_v<Src, AvgPoolLayer<T>>) out.add(AvgPoolLayer<U>(layer));
            else if constexpr (std::is_same_v<Src, FlattenLayer<T>>) out.add(FlattenLayer<U>(layer));
            else out.add(DenseLayer<U>(layer));
        }, node);
    }
    out.config_echo = config_echo;
    return out;
}

template <std::floating_point T>
struct ForwardResult {
    BasicTensor4<T> logits;
    ForwardCache<T> cache;  // populated only in Mode::Train
};

/// Runs every layer in order. Throws ShapeError naming the failing layer.
template <std::floating_point T>
ForwardResult<T> forward(ModelGraph<T>& model, const BasicTensor4<T>& x, Mode mode);

/// Eval-mode logits without a cache (does not touch running statistics).
template <std::floating_point T>
BasicTensor4<T> predict(const ModelGraph<T>& model, const BasicTensor4<T>& x, Mode mode = Mode::Eval);

/**
 * Gradients of every trainable parameter. Frozen banks get no buffers; their
 * layers only propagate input gradients. `weight_decay` adds lambda * w to
 * parameters flagged for decay.
 */
template <std::floating_point T>
Gradients<T> backward(const ModelGraph<T>& model, const ForwardCache<T>& cache, const BasicTensor4<T>& d_logits,
                      T weight_decay = T{0}, BasicTensor4<T>* d_input = nullptr);

}  // namespace step
