#include "step/model.hpp"

#include <string>

namespace step {

std::string_view layer_kind_name(LayerKind k) noexcept {
    switch (k) {
        case LayerKind::TernaryConv: return "ternary_conv";
        case LayerKind::FloatConv: return "float_conv";
        case LayerKind::Conv1x1: return "conv1x1";
        case LayerKind::StepBlock: return "step_block";
        case LayerKind::BatchNorm: return "batch_norm";
        case LayerKind::LeakyRelu: return "leaky_relu";
        case LayerKind::AvgPool: return "avg_pool";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
    }
    return "unknown";
}

namespace {

template <class T>
std::string layer_label(const ModelGraph<T>& model, std::size_t i) {
    return "layer " + std::to_string(i) + " (" + std::string(layer_kind_name(kind_of(model.layers()[i]))) + ")";
}

}  // namespace

template <std::floating_point T>
std::vector<Shape4> ModelGraph<T>::shape_walk(int n) const {
    std::vector<Shape4> shapes;
    Shape4 s{n, input_shape_.c, input_shape_.h, input_shape_.w};
    shapes.push_back(s);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        try {
            s = std::visit([&](const auto& layer) { return layer.output_shape(s); }, layers_[i]);
        } catch (const ShapeError& e) {
            throw ShapeError(layer_label(*this, i) + ": " + e.what());
        }
        shapes.push_back(s);
    }
    return shapes;
}

template <std::floating_point T>
void ModelGraph<T>::validate() const {
    const auto shapes = shape_walk(1);
    const auto& last = shapes.back();
    if (last.c != num_classes_ || last.h != 1 || last.w != 1) {
        throw ShapeError("model output " + to_string(last) + " is not (n, " + std::to_string(num_classes_) +
                         ", 1, 1)");
    }
}

template <std::floating_point T>
std::vector<const FilterBank*> ModelGraph<T>::frozen_banks() const {
    std::vector<const FilterBank*> out;
    for (const auto& node : layers_) {
        if (const auto* tc = std::get_if<TernaryConvLayer<T>>(&node)) out.push_back(tc->bank.get());
        if (const auto* sb = std::get_if<StepBlockLayer<T>>(&node)) {
            out.push_back(sb->cslbp.get());
            out.push_back(sb->haar.get());
        }
    }
    return out;
}

template <std::floating_point T>
ForwardResult<T> forward(ModelGraph<T>& model, const BasicTensor4<T>& x, Mode mode) {
    const auto& in = model.input_shape();
    const auto& xs = x.shape();
    if (xs.c != in.c || xs.h != in.h || xs.w != in.w) {
        throw ShapeError("model input must be (n," + std::to_string(in.c) + "," + std::to_string(in.h) + "," +
                         std::to_string(in.w) + "), got " + to_string(xs));
    }
    ForwardResult<T> result;
    const bool keep = mode == Mode::Train;
    if (keep) {
        result.cache.model_version = model.version();
        result.cache.model = &model;
        result.cache.input_shape = xs;
        result.cache.layers.resize(model.layers().size());
    }
    BasicTensor4<T> h = x;
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
        LayerCache<T>* lc = keep ? &result.cache.layers[i] : nullptr;
        try {
            h = std::visit([&](auto& layer) { return layer.forward(h, mode, lc); }, model.layers()[i]);
        } catch (const ShapeError& e) {
            throw ShapeError(layer_label(model, i) + ": " + e.what());
        }
    }
    result.logits = std::move(h);
    return result;
}

template <std::floating_point T>
BasicTensor4<T> predict(const ModelGraph<T>& model, const BasicTensor4<T>& x, Mode mode) {
    if (mode == Mode::Train) throw ContractError("predict runs in an eval mode only");
    // eval-mode forward never mutates layer state
    return forward(const_cast<ModelGraph<T>&>(model), x, mode).logits;
}

template <std::floating_point T>
Gradients<T> backward(const ModelGraph<T>& model, const ForwardCache<T>& cache, const BasicTensor4<T>& d_logits,
                      T weight_decay, BasicTensor4<T>* d_input) {
    if (cache.model != &model || cache.model_version != model.version() ||
        cache.layers.size() != model.layers().size()) {
        throw ContractError("backward: stale or foreign forward cache");
    }
    Gradients<T> grads;
    model.for_each_param([&](const std::string& key, const Parameter<T>& p) {
        if (p.trainable) grads[key].assign(p.size(), T{0});
    });
    BasicTensor4<T> g = d_logits;
    for (std::size_t idx = model.layers().size(); idx-- > 0;) {
        GradSink<T> sink(grads, std::to_string(idx) + ".");
        g = std::visit([&](const auto& layer) { return layer.backward(g, cache.layers[idx], sink); },
                       model.layers()[idx]);
    }
    if (weight_decay != T{0}) {
        model.for_each_param([&](const std::string& key, const Parameter<T>& p) {
            if (!p.trainable || !p.decay) return;
            auto& buf = grads.at(key);
            for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += weight_decay * p.value[i];
        });
    }
    if (d_input) *d_input = std::move(g);
    return grads;
}

template class ModelGraph<float>;
template class ModelGraph<double>;
template ForwardResult<float> forward(ModelGraph<float>&, const BasicTensor4<float>&, Mode);
template ForwardResult<double> forward(ModelGraph<double>&, const BasicTensor4<double>&, Mode);
template BasicTensor4<float> predict(const ModelGraph<float>&, const BasicTensor4<float>&, Mode);
template BasicTensor4<double> predict(const ModelGraph<double>&, const BasicTensor4<double>&, Mode);
template Gradients<float> backward(const ModelGraph<float>&, const ForwardCache<float>&, const BasicTensor4<float>&,
                                   float, BasicTensor4<float>*);
template Gradients<double> backward(const ModelGraph<double>&, const ForwardCache<double>&,
                                    const BasicTensor4<double>&, double, BasicTensor4<double>*);

}  // namespace step
