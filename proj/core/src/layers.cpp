#include "step/layers.hpp"

#include <cmath>
#include <string>

#include "step/parallel.hpp"

namespace step {

std::string_view fusion_name(Fusion f) noexcept { return f == Fusion::Add ? "add" : "conv1x1"; }

Fusion parse_fusion(std::string_view name) {
    if (name == "add") return Fusion::Add;
    if (name == "conv1x1" || name == "1x1") return Fusion::Conv1x1;
    throw ContractError("unknown fusion mode '" + std::string(name) + "'");
}

template <std::floating_point T>
std::vector<T>& GradSink<T>::buffer(const Parameter<T>& p) {
    auto& buf = grads_[prefix_ + p.name];
    if (buf.size() != p.size()) buf.assign(p.size(), T{0});
    return buf;
}

namespace {

template <class T>
void add_into(BasicTensor4<T>& acc, const BasicTensor4<T>& x) {
    auto a = acc.data();
    auto b = x.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

/// out[n, o, p] = sum_i W[o, i] * x[n, i, p]
template <class T>
BasicTensor4<T> pointwise_forward(const BasicTensor4<T>& x, const std::vector<T>& w, int out_c) {
    const auto& is = x.shape();
    BasicTensor4<T> out({is.n, out_c, is.h, is.w});
    const auto plane = is.plane();
    parallel_for(0, is.n, [&](int n) {
        const T* in = x.sample(n);
        T* o = out.sample(n);
        for (int oc = 0; oc < out_c; ++oc) {
            T* dst = o + static_cast<std::size_t>(oc) * plane;
            for (int ic = 0; ic < is.c; ++ic) {
                const T wv = w[static_cast<std::size_t>(oc) * is.c + ic];
                const T* src = in + static_cast<std::size_t>(ic) * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] += wv * src[p];
            }
        }
    });
    return out;
}

template <class T>
BasicTensor4<T> pointwise_input_grad(const BasicTensor4<T>& dy, const std::vector<T>& w, int in_c) {
    const auto& os = dy.shape();
    BasicTensor4<T> dx({os.n, in_c, os.h, os.w});
    const auto plane = os.plane();
    parallel_for(0, os.n, [&](int n) {
        const T* g = dy.sample(n);
        T* d = dx.sample(n);
        for (int ic = 0; ic < in_c; ++ic) {
            T* dst = d + static_cast<std::size_t>(ic) * plane;
            for (int oc = 0; oc < os.c; ++oc) {
                const T wv = w[static_cast<std::size_t>(oc) * in_c + ic];
                const T* src = g + static_cast<std::size_t>(oc) * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] += wv * src[p];
            }
        }
    });
    return dx;
}

template <class T>
void pointwise_weight_grad(const BasicTensor4<T>& x, const BasicTensor4<T>& dy, std::vector<T>& dw) {
    const auto& is = x.shape();
    const int out_c = dy.shape().c;
    const auto plane = is.plane();
    for (int n = 0; n < is.n; ++n) {
        const T* in = x.sample(n);
        const T* g = dy.sample(n);
        for (int oc = 0; oc < out_c; ++oc) {
            const T* gp = g + static_cast<std::size_t>(oc) * plane;
            for (int ic = 0; ic < is.c; ++ic) {
                const T* xp = in + static_cast<std::size_t>(ic) * plane;
                T acc{0};
                for (std::size_t p = 0; p < plane; ++p) acc += gp[p] * xp[p];
                dw[static_cast<std::size_t>(oc) * is.c + ic] += acc;
            }
        }
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

}  // namespace

// --- TernaryConvLayer -------------------------------------------------------

template <std::floating_point T>
TernaryConvLayer<T>::TernaryConvLayer(FilterBank b, ConvGeometry g)
    : bank(std::make_shared<const FilterBank>(std::move(b))), geom(g) {
    plan = std::make_shared<const TernaryConvPlan>(*bank);
}

template <std::floating_point T>
Shape4 TernaryConvLayer<T>::output_shape(const Shape4& in) const {
    const auto& s = bank->shape();
    require(in.c == s.k, "ternary conv expects " + std::to_string(s.k) + " channels, got " + std::to_string(in.c));
    return conv_output_shape(in, s.f, s.h, s.w, geom);
}

template <std::floating_point T>
BasicTensor4<T> TernaryConvLayer<T>::forward(const BasicTensor4<T>& x, Mode, LayerCache<T>* cache) {
    if (cache) cache->input_shape = x.shape();
    return conv2d_ternary(x, *plan, geom);
}

template <std::floating_point T>
BasicTensor4<T> TernaryConvLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                              GradSink<T>&) const {
    return conv2d_input_grad(dy, *plan, geom, cache.input_shape);
}

// --- FloatConvLayer ---------------------------------------------------------

template <std::floating_point T>
FloatConvLayer<T>::FloatConvLayer(int filters, int channels, int kh, int kw, ConvGeometry g)
    : weight("weight", {filters, channels, kh, kw}, true), geom(g) {}

template <std::floating_point T>
DenseKernels<T> FloatConvLayer<T>::kernels() const {
    DenseKernels<T> k(weight.dims[0], weight.dims[1], weight.dims[2], weight.dims[3]);
    k.values = weight.value;
    return k;
}

template <std::floating_point T>
Shape4 FloatConvLayer<T>::output_shape(const Shape4& in) const {
    require(in.c == weight.dims[1],
            "float conv expects " + std::to_string(weight.dims[1]) + " channels, got " + std::to_string(in.c));
    return conv_output_shape(in, weight.dims[0], weight.dims[2], weight.dims[3], geom);
}

template <std::floating_point T>
BasicTensor4<T> FloatConvLayer<T>::forward(const BasicTensor4<T>& x, Mode, LayerCache<T>* cache) {
    if (cache) {
        cache->input_shape = x.shape();
        cache->saved = {x};
    }
    return conv2d_reference(x, kernels(), geom);
}

template <std::floating_point T>
BasicTensor4<T> FloatConvLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                            GradSink<T>& sink) const {
    const auto& x = cache.saved.at(0);
    if (weight.trainable) {
        auto dw = conv2d_reference_weight_grad(x, dy, weight.dims[2], weight.dims[3], geom);
        auto& buf = sink.buffer(weight);
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += dw.values[i];
    }
    return conv2d_reference_input_grad(dy, kernels(), geom, cache.input_shape);
}

// --- Conv1x1Layer -----------------------------------------------------------

template <std::floating_point T>
Conv1x1Layer<T>::Conv1x1Layer(int out_channels, int in_channels, bool clamp_unit, std::string name)
    : weight(std::move(name), {out_channels, in_channels}, true, clamp_unit) {}

template <std::floating_point T>
Shape4 Conv1x1Layer<T>::output_shape(const Shape4& in) const {
    require(in.c == in_channels(),
            "1x1 conv expects " + std::to_string(in_channels()) + " channels, got " + std::to_string(in.c));
    return {in.n, out_channels(), in.h, in.w};
}

template <std::floating_point T>
BasicTensor4<T> Conv1x1Layer<T>::forward(const BasicTensor4<T>& x, Mode, LayerCache<T>* cache) {
    output_shape(x.shape());
    if (cache) {
        cache->input_shape = x.shape();
        cache->saved = {x};
    }
    return pointwise_forward(x, weight.value, out_channels());
}

template <std::floating_point T>
BasicTensor4<T> Conv1x1Layer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                          GradSink<T>& sink) const {
    if (weight.trainable) pointwise_weight_grad(cache.saved.at(0), dy, sink.buffer(weight));
    return pointwise_input_grad(dy, weight.value, in_channels());
}

// --- StepBlockLayer ---------------------------------------------------------

template <std::floating_point T>
StepBlockLayer<T>::StepBlockLayer(FilterBank cs, FilterBank hr, ConvGeometry g, Fusion f, bool clamp_fusion)
    : cslbp(std::make_shared<const FilterBank>(std::move(cs))),
      haar(std::make_shared<const FilterBank>(std::move(hr))),
      geom(g),
      fusion(f) {
    if (!(cslbp->shape() == haar->shape())) throw ShapeError("STeP block branches must share (h, w, k, f)");
    cslbp_plan = std::make_shared<const TernaryConvPlan>(*cslbp);
    haar_plan = std::make_shared<const TernaryConvPlan>(*haar);
    if (fusion == Fusion::Conv1x1) fuse = Conv1x1Layer<T>(filters(), 2 * filters(), clamp_fusion, "fusion.weight");
}

template <std::floating_point T>
Shape4 StepBlockLayer<T>::output_shape(const Shape4& in) const {
    const auto& s = cslbp->shape();
    require(in.c == s.k, "STeP block expects " + std::to_string(s.k) + " channels, got " + std::to_string(in.c));
    return conv_output_shape(in, s.f, s.h, s.w, geom);
}

template <std::floating_point T>
BasicTensor4<T> StepBlockLayer<T>::forward(const BasicTensor4<T>& x, Mode, LayerCache<T>* cache) {
    output_shape(x.shape());
    auto y_cs = conv2d_ternary(x, *cslbp_plan, geom);
    auto y_haar = conv2d_ternary(x, *haar_plan, geom);
    if (cache) cache->input_shape = x.shape();
    if (fusion == Fusion::Add) {
        add_into(y_cs, y_haar);
        return y_cs;
    }
    const auto& bs = y_cs.shape();
    BasicTensor4<T> cat({bs.n, 2 * bs.c, bs.h, bs.w});
    for (int n = 0; n < bs.n; ++n) {
        std::copy_n(y_cs.sample(n), bs.sample(), cat.sample(n));
        std::copy_n(y_haar.sample(n), bs.sample(), cat.sample(n) + bs.sample());
    }
    auto out = pointwise_forward(cat, fuse.weight.value, fuse.out_channels());
    if (cache) cache->saved = {std::move(cat)};
    return out;
}

template <std::floating_point T>
BasicTensor4<T> StepBlockLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                            GradSink<T>& sink) const {
    if (fusion == Fusion::Add) {
        auto dx = conv2d_input_grad(dy, *cslbp_plan, geom, cache.input_shape);
        add_into(dx, conv2d_input_grad(dy, *haar_plan, geom, cache.input_shape));
        return dx;
    }
    const auto& cat = cache.saved.at(0);
    if (fuse.weight.trainable) pointwise_weight_grad(cat, dy, sink.buffer(fuse.weight));
    auto dcat = pointwise_input_grad(dy, fuse.weight.value, fuse.in_channels());
    const auto& cs = cat.shape();
    const Shape4 branch{cs.n, cs.c / 2, cs.h, cs.w};
    BasicTensor4<T> d_cs(branch);
    BasicTensor4<T> d_haar(branch);
    for (int n = 0; n < cs.n; ++n) {
        std::copy_n(dcat.sample(n), branch.sample(), d_cs.sample(n));
        std::copy_n(dcat.sample(n) + branch.sample(), branch.sample(), d_haar.sample(n));
    }
    auto dx = conv2d_input_grad(d_cs, *cslbp_plan, geom, cache.input_shape);
    add_into(dx, conv2d_input_grad(d_haar, *haar_plan, geom, cache.input_shape));
    return dx;
}

// --- BatchNormLayer ---------------------------------------------------------

template <std::floating_point T>
BatchNormLayer<T>::BatchNormLayer(int channels)
    : gamma("gamma", {channels}, false),
      beta("beta", {channels}, false),
      running_mean(static_cast<std::size_t>(channels), T{0}),
      running_var(static_cast<std::size_t>(channels), T{1}) {
    std::fill(gamma.value.begin(), gamma.value.end(), T{1});
}

template <std::floating_point T>
Shape4 BatchNormLayer<T>::output_shape(const Shape4& in) const {
    require(in.c == channels(),
            "batch norm expects " + std::to_string(channels()) + " channels, got " + std::to_string(in.c));
    return in;
}

template <std::floating_point T>
BasicTensor4<T> BatchNormLayer<T>::forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache) {
    const auto& s = output_shape(x.shape());
    const auto plane = s.plane();
    BasicTensor4<T> y(s);
    if (mode != Mode::Train) {
        for (int c = 0; c < s.c; ++c) {
            const T inv = T{1} / std::sqrt(running_var[c] + eps);
            const T g = gamma.value[c];
            const T b = beta.value[c];
            const T m = running_mean[c];
            for (int n = 0; n < s.n; ++n) {
                const T* src = x.sample(n) + c * plane;
                T* dst = y.sample(n) + c * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] = (src[p] - m) * inv * g + b;
            }
        }
        return y;
    }
    const double count = static_cast<double>(s.n) * static_cast<double>(plane);
    if (count < 1) throw ShapeError("batch norm in train mode needs a non-empty batch");
    BasicTensor4<T> xhat(s);
    BasicTensor4<T> inv_std({1, s.c, 1, 1});
    for (int c = 0; c < s.c; ++c) {
        double sum = 0;
        for (int n = 0; n < s.n; ++n) {
            const T* src = x.sample(n) + c * plane;
            for (std::size_t p = 0; p < plane; ++p) sum += src[p];
        }
        const double mean = sum / count;
        double sq = 0;
        for (int n = 0; n < s.n; ++n) {
            const T* src = x.sample(n) + c * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                const double d = src[p] - mean;
                sq += d * d;
            }
        }
        const double var = sq / count;
        const T inv = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
        inv_std.data()[static_cast<std::size_t>(c)] = inv;
        const T g = gamma.value[c];
        const T b = beta.value[c];
        const T m = static_cast<T>(mean);
        for (int n = 0; n < s.n; ++n) {
            const T* src = x.sample(n) + c * plane;
            T* xh = xhat.sample(n) + c * plane;
            T* dst = y.sample(n) + c * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                xh[p] = (src[p] - m) * inv;
                dst[p] = xh[p] * g + b;
            }
        }
        // running variance uses the unbiased estimate
        const double unbiased = count > 1 ? sq / (count - 1) : var;
        running_mean[c] = static_cast<T>((1 - momentum) * running_mean[c] + momentum * mean);
        running_var[c] = static_cast<T>((1 - momentum) * running_var[c] + momentum * unbiased);
    }
    if (cache) {
        cache->input_shape = s;
        cache->saved = {std::move(xhat), std::move(inv_std)};
    }
    return y;
}

template <std::floating_point T>
BasicTensor4<T> BatchNormLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                            GradSink<T>& sink) const {
    const auto& xhat = cache.saved.at(0);
    const auto& inv_std = cache.saved.at(1);
    const auto& s = cache.input_shape;
    const auto plane = s.plane();
    const double count = static_cast<double>(s.n) * static_cast<double>(plane);
    BasicTensor4<T> dx(s);
    std::vector<T>* dgamma = gamma.trainable ? &sink.buffer(gamma) : nullptr;
    std::vector<T>* dbeta = beta.trainable ? &sink.buffer(beta) : nullptr;
    for (int c = 0; c < s.c; ++c) {
        double sum_dy = 0;
        double sum_dy_xhat = 0;
        for (int n = 0; n < s.n; ++n) {
            const T* g = dy.sample(n) + c * plane;
            const T* xh = xhat.sample(n) + c * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                sum_dy += g[p];
                sum_dy_xhat += static_cast<double>(g[p]) * xh[p];
            }
        }
        if (dgamma) (*dgamma)[c] += static_cast<T>(sum_dy_xhat);
        if (dbeta) (*dbeta)[c] += static_cast<T>(sum_dy);
        const double scale = static_cast<double>(gamma.value[c]) * inv_std.data()[static_cast<std::size_t>(c)];
        const double mean_dy = sum_dy / count;
        const double mean_dy_xhat = sum_dy_xhat / count;
        for (int n = 0; n < s.n; ++n) {
            const T* g = dy.sample(n) + c * plane;
            const T* xh = xhat.sample(n) + c * plane;
            T* d = dx.sample(n) + c * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                d[p] = static_cast<T>(scale * (g[p] - mean_dy - xh[p] * mean_dy_xhat));
            }
        }
    }
    return dx;
}

// --- LeakyReluLayer ---------------------------------------------------------

template <std::floating_point T>
LeakyReluLayer<T>::LeakyReluLayer(T s) : slope(s) {
    if (!(s > T{0} && s < T{1})) throw ContractError("LeakyReLU slope must lie in (0, 1)");
}

template <std::floating_point T>
BasicTensor4<T> LeakyReluLayer<T>::forward(const BasicTensor4<T>& x, Mode mode, LayerCache<T>* cache) {
    BasicTensor4<T> y(x.shape());
    auto in = x.data();
    auto out = y.data();
    if (mode == Mode::EvalQuantized) {
        // nearbyint under the default rounding mode rounds ties to even
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? std::nearbyint(in[i]) : T{0};
    } else {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : slope * in[i];
    }
    if (cache) {
        cache->input_shape = x.shape();
        cache->saved = {x};
    }
    return y;
}

template <std::floating_point T>
BasicTensor4<T> LeakyReluLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                            GradSink<T>&) const {
    const auto x = cache.saved.at(0).data();
    BasicTensor4<T> dx(dy.shape());
    auto g = dy.data();
    auto d = dx.data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = x[i] > T{0} ? g[i] : slope * g[i];
    return dx;
}

// --- AvgPoolLayer -----------------------------------------------------------

template <std::floating_point T>
AvgPoolLayer<T>::AvgPoolLayer(int s, int st) : size(s), stride(st) {
    if (s < 1 || st < 1) throw ContractError("avg pool size and stride must be >= 1");
}

template <std::floating_point T>
Shape4 AvgPoolLayer<T>::output_shape(const Shape4& in) const {
    require(in.h >= size && in.w >= size, "avg pool window " + std::to_string(size) + " larger than input " +
                                              std::to_string(in.h) + "x" + std::to_string(in.w));
    return {in.n, in.c, (in.h - size) / stride + 1, (in.w - size) / stride + 1};
}

template <std::floating_point T>
BasicTensor4<T> AvgPoolLayer<T>::forward(const BasicTensor4<T>& x, Mode, LayerCache<T>* cache) {
    const auto& is = x.shape();
    const auto os = output_shape(is);
    BasicTensor4<T> y(os);
    const T norm = T{1} / static_cast<T>(size * size);
    for (int n = 0; n < os.n; ++n) {
        for (int c = 0; c < os.c; ++c) {
            for (int oy = 0; oy < os.h; ++oy) {
                for (int ox = 0; ox < os.w; ++ox) {
                    T acc{0};
                    for (int ky = 0; ky < size; ++ky) {
                        for (int kx = 0; kx < size; ++kx) acc += x.at(n, c, oy * stride + ky, ox * stride + kx);
                    }
                    y.at(n, c, oy, ox) = acc * norm;
                }
            }
        }
    }
    if (cache) cache->input_shape = is;
    return y;
}

template <std::floating_point T>
BasicTensor4<T> AvgPoolLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                          GradSink<T>&) const {
    const auto& is = cache.input_shape;
    const auto& os = dy.shape();
    BasicTensor4<T> dx(is);
    const T norm = T{1} / static_cast<T>(size * size);
    for (int n = 0; n < os.n; ++n) {
        for (int c = 0; c < os.c; ++c) {
            for (int oy = 0; oy < os.h; ++oy) {
                for (int ox = 0; ox < os.w; ++ox) {
                    const T g = dy.at(n, c, oy, ox) * norm;
                    for (int ky = 0; ky < size; ++ky) {
                        for (int kx = 0; kx < size; ++kx) dx.at(n, c, oy * stride + ky, ox * stride + kx) += g;
                    }
                }
            }
        }
    }
    return dx;
}

// --- FlattenLayer -----------------------------------------------------------

template <std::floating_point T>
BasicTensor4<T> FlattenLayer<T>::forward(const BasicTensor4<T>& x, Mode, LayerCache<T>* cache) {
    if (cache) cache->input_shape = x.shape();
    return BasicTensor4<T>(output_shape(x.shape()), std::vector<T>(x.data().begin(), x.data().end()));
}

template <std::floating_point T>
BasicTensor4<T> FlattenLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                          GradSink<T>&) const {
    return BasicTensor4<T>(cache.input_shape, std::vector<T>(dy.data().begin(), dy.data().end()));
}

// --- DenseLayer -------------------------------------------------------------

template <std::floating_point T>
DenseLayer<T>::DenseLayer(int in_features, int out_features)
    : weight("weight", {out_features, in_features}, true), bias("bias", {out_features}, false) {}

template <std::floating_point T>
Shape4 DenseLayer<T>::output_shape(const Shape4& in) const {
    require(static_cast<int>(in.sample()) == in_features(), "dense layer expects " + std::to_string(in_features()) +
                                                                " features, got " + std::to_string(in.sample()));
    return {in.n, out_features(), 1, 1};
}

template <std::floating_point T>
BasicTensor4<T> DenseLayer<T>::forward(const BasicTensor4<T>& x, Mode, LayerCache<T>* cache) {
    const auto os = output_shape(x.shape());
    BasicTensor4<T> y(os);
    const int in = in_features();
    for (int n = 0; n < os.n; ++n) {
        const T* src = x.sample(n);
        T* dst = y.sample(n);
        for (int o = 0; o < os.c; ++o) {
            const T* w = weight.value.data() + static_cast<std::size_t>(o) * in;
            T acc = bias.value[o];
            for (int i = 0; i < in; ++i) acc += w[i] * src[i];
            dst[o] = acc;
        }
    }
    if (cache) {
        cache->input_shape = x.shape();
        cache->saved = {x};
    }
    return y;
}

template <std::floating_point T>
BasicTensor4<T> DenseLayer<T>::backward(const BasicTensor4<T>& dy, const LayerCache<T>& cache,
                                        GradSink<T>& sink) const {
    const auto& x = cache.saved.at(0);
    const int in = in_features();
    const int out = out_features();
    std::vector<T>* dw = weight.trainable ? &sink.buffer(weight) : nullptr;
    std::vector<T>* db = bias.trainable ? &sink.buffer(bias) : nullptr;
    BasicTensor4<T> dx(cache.input_shape);
    for (int n = 0; n < dy.shape().n; ++n) {
        const T* g = dy.sample(n);
        const T* src = x.sample(n);
        T* d = dx.sample(n);
        for (int o = 0; o < out; ++o) {
            const T go = g[o];
            const T* w = weight.value.data() + static_cast<std::size_t>(o) * in;
            if (db) (*db)[o] += go;
            if (dw) {
                T* dwo = dw->data() + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) dwo[i] += go * src[i];
            }
            for (int i = 0; i < in; ++i) d[i] += go * w[i];
        }
    }
    return dx;
}

#define STEP_INSTANTIATE_LAYERS(T)      \
    template class GradSink<T>;         \
    template struct TernaryConvLayer<T>; \
    template struct FloatConvLayer<T>;  \
    template struct Conv1x1Layer<T>;    \
    template struct StepBlockLayer<T>;  \
    template struct BatchNormLayer<T>;  \
    template struct LeakyReluLayer<T>;  \
    template struct AvgPoolLayer<T>;    \
    template struct FlattenLayer<T>;    \
    template struct DenseLayer<T>;

STEP_INSTANTIATE_LAYERS(float)
STEP_INSTANTIATE_LAYERS(double)

#undef STEP_INSTANTIATE_LAYERS

}  // namespace step
