#include "step/conv.hpp"

#include <algorithm>
#include <string>

#include "step/parallel.hpp"

namespace step {

std::string to_string(const Shape4& s) {
    return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
           std::to_string(s.w) + ")";
}

int ConvGeometry::output_dim(int in, int kernel) const {
    if (stride < 1) throw ShapeError("conv stride must be >= 1");
    if (padding < 0) throw ShapeError("conv padding must be >= 0");
    const int span = in + 2 * padding - kernel;
    if (span < 0) {
        throw ShapeError("kernel " + std::to_string(kernel) + " larger than padded input " +
                         std::to_string(in + 2 * padding));
    }
    return span / stride + 1;
}

Shape4 conv_output_shape(const Shape4& in, int filters, int kh, int kw, const ConvGeometry& g) {
    return {in.n, filters, g.output_dim(in.h, kh), g.output_dim(in.w, kw)};
}

namespace {

template <class T>
struct PlainArith {
    static T add(T a, T b) noexcept { return a + b; }
    static T sub(T a, T b) noexcept { return a - b; }
    static T mul(T a, T b) noexcept { return a * b; }
};

struct CountingArith {
    OpCounts& counts;
    float add(float a, float b) noexcept {
        ++counts.adds;
        return a + b;
    }
    float sub(float a, float b) noexcept {
        ++counts.adds;
        return a - b;
    }
    float mul(float a, float b) noexcept {
        ++counts.mults;
        return a * b;
    }
};

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

/// Output columns [lo, hi] whose input column for kernel column kx lies inside [0, in_w).
struct ColumnRange {
    int lo;
    int hi;
};

ColumnRange valid_columns(int kx, int in_w, int out_w, const ConvGeometry& g) {
    const int lo = std::max(0, ceil_div(g.padding - kx, g.stride));
    const int hi = std::min(out_w - 1, floor_div(in_w - 1 + g.padding - kx, g.stride));
    return {lo, hi};
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

template <class T, class Arith>
void reference_sample(const T* in, const Shape4& is, const DenseKernels<T>& wts, const ConvGeometry& g, T* out,
                      const Shape4& os, Arith& arith) {
    for (int fo = 0; fo < os.c; ++fo) {
        for (int oy = 0; oy < os.h; ++oy) {
            for (int ox = 0; ox < os.w; ++ox) {
                T acc{0};
                for (int c = 0; c < is.c; ++c) {
                    for (int ky = 0; ky < wts.h; ++ky) {
                        const int iy = oy * g.stride - g.padding + ky;
                        if (iy < 0 || iy >= is.h) continue;
                        for (int kx = 0; kx < wts.w; ++kx) {
                            const int ix = ox * g.stride - g.padding + kx;
                            if (ix < 0 || ix >= is.w) continue;
                            acc = arith.add(acc, arith.mul(wts.at(fo, c, ky, kx),
                                                           in[(static_cast<std::size_t>(c) * is.h + iy) * is.w + ix]));
                        }
                    }
                }
                out[(static_cast<std::size_t>(fo) * os.h + oy) * os.w + ox] = acc;
            }
        }
    }
}

template <class T, class Arith>
void ternary_sample(const T* in, const Shape4& is, const TernaryConvPlan& plan, const ConvGeometry& g, T* out,
                    const Shape4& os, Arith& arith) {
    const int s = g.stride;
    for (int fo = 0; fo < os.c; ++fo) {
        T* plane = out + static_cast<std::size_t>(fo) * os.plane();
        std::fill(plane, plane + os.plane(), T{0});
        for (const auto& tap : plan.taps(fo)) {
            const auto cols = valid_columns(tap.kx, is.w, os.w, g);
            if (cols.lo > cols.hi) continue;
            const T* chan = in + static_cast<std::size_t>(tap.channel) * is.plane();
            for (int oy = 0; oy < os.h; ++oy) {
                const int iy = oy * s - g.padding + tap.ky;
                if (iy < 0 || iy >= is.h) continue;
                const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(iy) * is.w + tap.kx - g.padding;
                T* dst = plane + static_cast<std::size_t>(oy) * os.w;
                if (tap.sign > 0) {
                    for (int ox = cols.lo; ox <= cols.hi; ++ox) dst[ox] = arith.add(dst[ox], chan[base + ox * s]);
                } else {
                    for (int ox = cols.lo; ox <= cols.hi; ++ox) dst[ox] = arith.sub(dst[ox], chan[base + ox * s]);
                }
            }
        }
    }
}

template <class T, class Arith>
void ternary_input_grad_sample(const T* dy, const Shape4& os, const TernaryConvPlan& plan, const ConvGeometry& g,
                               T* dx, const Shape4& is, Arith& arith) {
    const int s = g.stride;
    std::fill(dx, dx + is.sample(), T{0});
    for (int fo = 0; fo < os.c; ++fo) {
        const T* gplane = dy + static_cast<std::size_t>(fo) * os.plane();
        for (const auto& tap : plan.taps(fo)) {
            const auto cols = valid_columns(tap.kx, is.w, os.w, g);
            if (cols.lo > cols.hi) continue;
            T* chan = dx + static_cast<std::size_t>(tap.channel) * is.plane();
            for (int oy = 0; oy < os.h; ++oy) {
                const int iy = oy * s - g.padding + tap.ky;
                if (iy < 0 || iy >= is.h) continue;
                const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(iy) * is.w + tap.kx - g.padding;
                const T* src = gplane + static_cast<std::size_t>(oy) * os.w;
                if (tap.sign > 0) {
                    for (int ox = cols.lo; ox <= cols.hi; ++ox) {
                        chan[base + ox * s] = arith.add(chan[base + ox * s], src[ox]);
                    }
                } else {
                    for (int ox = cols.lo; ox <= cols.hi; ++ox) {
                        chan[base + ox * s] = arith.sub(chan[base + ox * s], src[ox]);
                    }
                }
            }
        }
    }
}

void check_plan_input(const Shape4& in, const TernaryConvPlan& plan) {
    require(in.c == plan.shape().k, "ternary conv expects " + std::to_string(plan.shape().k) +
                                        " input channels, got " + std::to_string(in.c));
}

}  // namespace

template <std::floating_point T>
DenseKernels<T> decode_bank(const FilterBank& bank) {
    const auto& s = bank.shape();
    DenseKernels<T> out(s.f, s.k, s.h, s.w);
    const auto vals = bank.values();
    std::transform(vals.begin(), vals.end(), out.values.begin(), [](std::int8_t v) { return static_cast<T>(v); });
    return out;
}

PackedBank pack_bank(const FilterBank& bank) { return {bank.shape(), pack(bank.values())}; }

TernaryConvPlan::TernaryConvPlan(const PackedBank& bank) : shape_(bank.shape) {
    if (bank.bits.length != shape_.element_count()) throw ShapeError("packed bank length does not match its shape");
    const auto values = unpack(bank.bits);
    offsets_.reserve(static_cast<std::size_t>(shape_.f) + 1);
    offsets_.push_back(0);
    std::size_t idx = 0;
    for (int fo = 0; fo < shape_.f; ++fo) {
        for (int c = 0; c < shape_.k; ++c) {
            for (int ky = 0; ky < shape_.h; ++ky) {
                for (int kx = 0; kx < shape_.w; ++kx, ++idx) {
                    if (values[idx] != 0) taps_.push_back({c, ky, kx, values[idx]});
                }
            }
        }
        offsets_.push_back(taps_.size());
    }
}

template <std::floating_point T>
BasicTensor4<T> conv2d_reference(const BasicTensor4<T>& input, const DenseKernels<T>& weights,
                                 const ConvGeometry& geom) {
    require(input.shape().c == weights.k, "reference conv: input has " + std::to_string(input.shape().c) +
                                              " channels, kernels expect " + std::to_string(weights.k));
    const auto os = conv_output_shape(input.shape(), weights.f, weights.h, weights.w, geom);
    BasicTensor4<T> out(os);
    PlainArith<T> arith;
    parallel_for(0, os.n, [&](int n) {
        reference_sample(input.sample(n), input.shape(), weights, geom, out.sample(n), os, arith);
    });
    return out;
}

BasicTensor4<float> conv2d_reference_counted(const BasicTensor4<float>& input, const DenseKernels<float>& weights,
                                             const ConvGeometry& geom, OpCounts& counts) {
    require(input.shape().c == weights.k, "reference conv: channel mismatch");
    const auto os = conv_output_shape(input.shape(), weights.f, weights.h, weights.w, geom);
    BasicTensor4<float> out(os);
    CountingArith arith{counts};
    for (int n = 0; n < os.n; ++n) {
        reference_sample(input.sample(n), input.shape(), weights, geom, out.sample(n), os, arith);
    }
    return out;
}

template <std::floating_point T>
BasicTensor4<T> conv2d_ternary(const BasicTensor4<T>& input, const TernaryConvPlan& plan, const ConvGeometry& geom) {
    check_plan_input(input.shape(), plan);
    const auto os = conv_output_shape(input.shape(), plan.shape().f, plan.shape().h, plan.shape().w, geom);
    BasicTensor4<T> out(os);
    PlainArith<T> arith;
    parallel_for(0, os.n, [&](int n) {
        ternary_sample(input.sample(n), input.shape(), plan, geom, out.sample(n), os, arith);
    });
    return out;
}

BasicTensor4<float> conv2d_ternary_counted(const BasicTensor4<float>& input, const TernaryConvPlan& plan,
                                           const ConvGeometry& geom, OpCounts& counts) {
    check_plan_input(input.shape(), plan);
    const auto os = conv_output_shape(input.shape(), plan.shape().f, plan.shape().h, plan.shape().w, geom);
    BasicTensor4<float> out(os);
    CountingArith arith{counts};
    for (int n = 0; n < os.n; ++n) {
        ternary_sample(input.sample(n), input.shape(), plan, geom, out.sample(n), os, arith);
    }
    return out;
}

template <std::floating_point T>
BasicTensor4<T> conv2d_input_grad(const BasicTensor4<T>& out_grad, const TernaryConvPlan& plan,
                                  const ConvGeometry& geom, const Shape4& input_shape) {
    check_plan_input(input_shape, plan);
    const auto os = conv_output_shape(input_shape, plan.shape().f, plan.shape().h, plan.shape().w, geom);
    require(out_grad.shape() == os, "conv input grad: output gradient shape " + to_string(out_grad.shape()) +
                                        " does not match forward output " + to_string(os));
    BasicTensor4<T> dx(input_shape);
    PlainArith<T> arith;
    parallel_for(0, os.n, [&](int n) {
        ternary_input_grad_sample(out_grad.sample(n), os, plan, geom, dx.sample(n), input_shape, arith);
    });
    return dx;
}

BasicTensor4<float> conv2d_input_grad_counted(const BasicTensor4<float>& out_grad, const TernaryConvPlan& plan,
                                              const ConvGeometry& geom, const Shape4& input_shape,
                                              OpCounts& counts) {
    check_plan_input(input_shape, plan);
    const auto os = conv_output_shape(input_shape, plan.shape().f, plan.shape().h, plan.shape().w, geom);
    require(out_grad.shape() == os, "conv input grad: shape mismatch");
    BasicTensor4<float> dx(input_shape);
    CountingArith arith{counts};
    for (int n = 0; n < os.n; ++n) {
        ternary_input_grad_sample(out_grad.sample(n), os, plan, geom, dx.sample(n), input_shape, arith);
    }
    return dx;
}

template <std::floating_point T>
BasicTensor4<T> conv2d_reference_input_grad(const BasicTensor4<T>& out_grad, const DenseKernels<T>& weights,
                                            const ConvGeometry& geom, const Shape4& input_shape) {
    require(input_shape.c == weights.k, "reference conv input grad: channel mismatch");
    const auto os = conv_output_shape(input_shape, weights.f, weights.h, weights.w, geom);
    require(out_grad.shape() == os, "reference conv input grad: output gradient shape mismatch");
    BasicTensor4<T> dx(input_shape);
    const auto& is = input_shape;
    parallel_for(0, os.n, [&](int n) {
        const T* dy = out_grad.sample(n);
        T* d = dx.sample(n);
        for (int fo = 0; fo < os.c; ++fo) {
            for (int c = 0; c < is.c; ++c) {
                for (int ky = 0; ky < weights.h; ++ky) {
                    for (int kx = 0; kx < weights.w; ++kx) {
                        const T wv = weights.at(fo, c, ky, kx);
                        if (wv == T{0}) continue;
                        const auto cols = valid_columns(kx, is.w, os.w, geom);
                        for (int oy = 0; oy < os.h; ++oy) {
                            const int iy = oy * geom.stride - geom.padding + ky;
                            if (iy < 0 || iy >= is.h) continue;
                            const std::ptrdiff_t base =
                                (static_cast<std::ptrdiff_t>(c) * is.h + iy) * is.w + kx - geom.padding;
                            const T* src = dy + (static_cast<std::size_t>(fo) * os.h + oy) * os.w;
                            for (int ox = cols.lo; ox <= cols.hi; ++ox) d[base + ox * geom.stride] += wv * src[ox];
                        }
                    }
                }
            }
        }
    });
    return dx;
}

template <std::floating_point T>
DenseKernels<T> conv2d_reference_weight_grad(const BasicTensor4<T>& input, const BasicTensor4<T>& out_grad, int kh,
                                             int kw, const ConvGeometry& geom) {
    const auto& is = input.shape();
    const auto os = conv_output_shape(is, out_grad.shape().c, kh, kw, geom);
    require(out_grad.shape() == os, "reference conv weight grad: output gradient shape mismatch");
    DenseKernels<T> dw(os.c, is.c, kh, kw);
    for (int n = 0; n < is.n; ++n) {
        const T* x = input.sample(n);
        const T* dy = out_grad.sample(n);
        for (int fo = 0; fo < os.c; ++fo) {
            for (int c = 0; c < is.c; ++c) {
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const auto cols = valid_columns(kx, is.w, os.w, geom);
                        T acc{0};
                        for (int oy = 0; oy < os.h; ++oy) {
                            const int iy = oy * geom.stride - geom.padding + ky;
                            if (iy < 0 || iy >= is.h) continue;
                            const std::ptrdiff_t base =
                                (static_cast<std::ptrdiff_t>(c) * is.h + iy) * is.w + kx - geom.padding;
                            const T* g = dy + (static_cast<std::size_t>(fo) * os.h + oy) * os.w;
                            for (int ox = cols.lo; ox <= cols.hi; ++ox) acc += g[ox] * x[base + ox * geom.stride];
                        }
                        dw.values[((static_cast<std::size_t>(fo) * is.c + c) * kh + ky) * kw + kx] += acc;
                    }
                }
            }
        }
    }
    return dw;
}

#define STEP_INSTANTIATE_CONV(T)                                                                                     \
    template DenseKernels<T> decode_bank<T>(const FilterBank&);                                                      \
    template BasicTensor4<T> conv2d_reference<T>(const BasicTensor4<T>&, const DenseKernels<T>&,                     \
                                                 const ConvGeometry&);                                               \
    template BasicTensor4<T> conv2d_ternary<T>(const BasicTensor4<T>&, const TernaryConvPlan&, const ConvGeometry&); \
    template BasicTensor4<T> conv2d_input_grad<T>(const BasicTensor4<T>&, const TernaryConvPlan&,                    \
                                                  const ConvGeometry&, const Shape4&);                               \
    template BasicTensor4<T> conv2d_reference_input_grad<T>(const BasicTensor4<T>&, const DenseKernels<T>&,          \
                                                            const ConvGeometry&, const Shape4&);                     \
    template DenseKernels<T> conv2d_reference_weight_grad<T>(const BasicTensor4<T>&, const BasicTensor4<T>&, int,    \
                                                             int, const ConvGeometry&);

STEP_INSTANTIATE_CONV(float)
STEP_INSTANTIATE_CONV(double)

#undef STEP_INSTANTIATE_CONV

}  // namespace step
