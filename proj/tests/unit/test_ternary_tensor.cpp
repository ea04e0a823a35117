#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "step/conv.hpp"
#include "step/packed_ternary.hpp"
#include "step/pattern_gen.hpp"
#include "support.hpp"

using namespace step;
using step::test::brute_force_conv;
using step::test::random_tensor;

namespace {

std::vector<std::int8_t> random_ternary(PatternRng& rng, std::size_t n) {
    std::vector<std::int8_t> v(n);
    for (auto& x : v) x = static_cast<std::int8_t>(rng.uniform_int(-1, 1));
    return v;
}

FilterBank random_bank(PatternRng& rng, BankShape s) {
    return FilterBank(s, Family::Haar, 0, 0, random_ternary(rng, s.element_count()));
}

template <class T>
double dot(const BasicTensor4<T>& a, const BasicTensor4<T>& b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) acc += static_cast<double>(a.data()[i]) * b.data()[i];
    return acc;
}

std::vector<float> as_floats(const FilterBank& b) {
    return {b.values().begin(), b.values().end()};
}

}  // namespace

TEST_CASE("pack layout") {
    CHECK(pack(std::vector<std::int8_t>{0, 0, 0, 0}).bytes == std::vector<std::uint8_t>{0x00});
    // fields 01, 10, 00, 01 from the low bits up: 0b01'00'10'01
    CHECK(pack(std::vector<std::int8_t>{1, -1, 0, 1}).bytes == std::vector<std::uint8_t>{0x49});
    const auto nine = pack(std::vector<std::int8_t>{1, 1, 1, 1, -1, -1, -1, -1, 1});
    CHECK(nine.length == 9);
    CHECK(nine.bytes == std::vector<std::uint8_t>{0x55, 0xAA, 0x01});
    CHECK(PackedTernary::bytes_for(9) == 3);
    CHECK(PackedTernary::bytes_for(0) == 0);
    CHECK_THROWS_AS(pack(std::vector<std::int8_t>{0, 2}), EncodingError);
}

TEST_CASE("unpack") {
    CHECK(unpack(PackedTernary{}).empty());

    PackedTernary pad{9, {0x55, 0xAA, 0xFD}};  // pad fields of the last byte hold garbage
    CHECK(unpack(pad) == std::vector<std::int8_t>{1, 1, 1, 1, -1, -1, -1, -1, 1});

    CHECK_THROWS_AS(unpack(PackedTernary{4, {0x0C}}), CorruptionError);
    CHECK_THROWS_AS(unpack(PackedTernary{5, {0x00}}), CorruptionError);

    PatternRng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(0, 70));
        const auto v = random_ternary(rng, n);
        const auto p = pack(v);
        REQUIRE(p.bytes.size() == (n + 3) / 4);
        REQUIRE(unpack(p) == v);
    }
}

TEST_CASE("output geometry") {
    const ConvGeometry plain{1, 0}, strided{2, 1}, wide{3, 0};
    CHECK(plain.output_dim(5, 3) == 3);
    CHECK(strided.output_dim(5, 3) == 3);
    CHECK(wide.output_dim(8, 3) == 2);
    CHECK_THROWS_AS(plain.output_dim(2, 3), ShapeError);
}

TEST_CASE("reference convolution basics") {
    Tensor4 ones({1, 1, 3, 3}, 1.0f);
    DenseKernels<float> k(1, 1, 3, 3);
    std::fill(k.values.begin(), k.values.end(), 1.0f);
    const auto y = conv2d_reference(ones, k, {1, 0});
    CHECK(y.shape() == Shape4{1, 1, 1, 1});
    CHECK(y.data()[0] == 9.0f);

    PatternRng rng(3);
    const auto x = random_tensor({2, 1, 4, 5}, rng);
    DenseKernels<float> id(1, 1, 3, 3);
    id.values[4] = 1.0f;
    CHECK(conv2d_reference(x, id, {1, 1}) == x);

    DenseKernels<float> wrong(1, 2, 3, 3);
    CHECK_THROWS_AS(conv2d_reference(x, wrong, {1, 1}), ShapeError);
}

TEST_CASE("reference equals brute force on a fixed case") {
    PatternRng rng(21);
    const auto x = random_tensor({1, 2, 5, 5}, rng);
    const auto bank = random_bank(rng, {3, 3, 2, 2});
    const auto oracle = brute_force_conv(x, as_floats(bank), 2, 3, 3, 1, 1);
    CHECK(conv2d_reference(x, decode_bank<float>(bank), {1, 1}) == oracle);
    CHECK(conv2d_ternary(x, TernaryConvPlan(bank), {1, 1}) == oracle);
}

TEST_CASE("ternary path equals reference and brute force, randomized") {
    PatternRng rng(1234);
    for (int trial = 0; trial < 500; ++trial) {
        const int kh = static_cast<int>(rng.uniform_int(1, 5));
        const int kw = static_cast<int>(rng.uniform_int(1, 5));
        const int stride = static_cast<int>(rng.uniform_int(1, 3));
        const int pad = static_cast<int>(rng.uniform_int(0, 2));
        const int h = static_cast<int>(rng.uniform_int(std::max(1, kh - 2 * pad), 8));
        const int w = static_cast<int>(rng.uniform_int(std::max(1, kw - 2 * pad), 8));
        const int c = static_cast<int>(rng.uniform_int(1, 4));
        const int f = static_cast<int>(rng.uniform_int(1, 4));
        const int n = static_cast<int>(rng.uniform_int(1, 3));
        const auto x = random_tensor({n, c, h, w}, rng, 3.0);
        const auto bank = random_bank(rng, {kh, kw, c, f});
        const ConvGeometry g{stride, pad};

        const auto ref = conv2d_reference(x, decode_bank<float>(bank), g);
        const auto ter = conv2d_ternary(x, pack_bank(bank), g);
        const auto oracle = brute_force_conv(x, as_floats(bank), f, kh, kw, stride, pad);
        REQUIRE(ter == ref);
        REQUIRE(ref == oracle);

        OpCounts ops;
        REQUIRE(conv2d_ternary_counted(x, TernaryConvPlan(bank), g, ops) == ref);
        REQUIRE(ops.mults == 0);
    }
}

TEST_CASE("operation counters") {
    PatternRng rng(8);
    const auto x = random_tensor({1, 2, 6, 6}, rng);
    const auto bank = gen_filter_bank({3, 3, 2, 4}, Family::Haar, 5);
    const TernaryConvPlan plan(bank);
    const ConvGeometry g{1, 0};

    OpCounts ref_ops, ter_ops, grad_ops;
    conv2d_reference_counted(x, decode_bank<float>(bank), g, ref_ops);
    conv2d_ternary_counted(x, plan, g, ter_ops);
    const std::uint64_t outputs = 4 * 4 * 4;
    CHECK(ref_ops.mults == outputs * 2 * 9);
    CHECK(ref_ops.adds == outputs * 2 * 9);
    CHECK(ter_ops.mults == 0);
    // without padding every tap touches every output element
    CHECK(ter_ops.adds == plan.nonzero_count() * 16);
    CHECK(plan.nonzero_count() == bank.shape().element_count() -
                                      static_cast<std::size_t>(std::count(bank.values().begin(), bank.values().end(), 0)));

    Tensor4 dy({1, 4, 4, 4}, 1.0f);
    conv2d_input_grad_counted(dy, plan, g, x.shape(), grad_ops);
    CHECK(grad_ops.mults == 0);
    CHECK(grad_ops.adds == ter_ops.adds);
}

TEST_CASE("ternary path special cases") {
    PatternRng rng(4);
    const auto x = random_tensor({2, 3, 6, 6}, rng);
    const FilterBank zeros({3, 3, 3, 2}, Family::CsLbp, 0, 0, std::vector<std::int8_t>(54, 0));
    const auto y = conv2d_ternary(x, TernaryConvPlan(zeros), {1, 1});
    CHECK(std::all_of(y.data().begin(), y.data().end(), [](float v) { return v == 0.0f; }));

    const Tensor4 constant({1, 3, 7, 7}, 0.375f);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto cs = gen_filter_bank({3, 3, 3, 4}, Family::CsLbp, seed);
        const auto out = conv2d_ternary(constant, TernaryConvPlan(cs), {1, 0});
        REQUIRE(std::all_of(out.data().begin(), out.data().end(), [](float v) { return v == 0.0f; }));
    }

    const auto bank = random_bank(rng, {3, 3, 2, 1});
    CHECK_THROWS_AS(conv2d_ternary(x, TernaryConvPlan(bank), {1, 1}), ShapeError);
}

TEST_CASE("linearity") {
    PatternRng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_tensor({1, 3, 7, 6}, rng);
        const auto z = random_tensor({1, 3, 7, 6}, rng);
        const auto bank = random_bank(rng, {3, 3, 3, 4});
        const TernaryConvPlan plan(bank);
        const float a = 0.7f, b = -1.3f;
        Tensor4 mix(x.shape());
        for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = a * x.data()[i] + b * z.data()[i];
        const auto lhs = conv2d_ternary(mix, plan, {2, 1});
        const auto cx = conv2d_ternary(x, plan, {2, 1});
        const auto cz = conv2d_ternary(z, plan, {2, 1});
        for (std::size_t i = 0; i < lhs.data().size(); ++i) {
            const double rhs = a * cx.data()[i] + b * cz.data()[i];
            const double scale = std::max({1.0, std::abs(rhs), std::abs(static_cast<double>(lhs.data()[i]))});
            REQUIRE(std::abs(lhs.data()[i] - rhs) / scale < 1e-5);
        }
    }
}

TEST_CASE("input gradient is the adjoint") {
    PatternRng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const int kh = static_cast<int>(rng.uniform_int(1, 4));
        const int kw = static_cast<int>(rng.uniform_int(1, 4));
        const ConvGeometry g{static_cast<int>(rng.uniform_int(1, 3)), static_cast<int>(rng.uniform_int(0, 2))};
        const Shape4 xs{2, static_cast<int>(rng.uniform_int(1, 3)), static_cast<int>(rng.uniform_int(4, 8)),
                        static_cast<int>(rng.uniform_int(4, 8))};
        const auto bank = random_bank(rng, {kh, kw, xs.c, static_cast<int>(rng.uniform_int(1, 3))});
        const TernaryConvPlan plan(bank);
        const auto x = random_tensor(xs, rng);
        const auto y = conv2d_ternary(x, plan, g);
        const auto gy = random_tensor(y.shape(), rng);
        const auto gx = conv2d_input_grad(gy, plan, g, xs);
        REQUIRE(gx.shape() == xs);
        const double lhs = dot(y, gy), rhs = dot(x, gx);
        REQUIRE(std::abs(lhs - rhs) <= 1e-5 * std::max(1.0, std::abs(lhs)));

        // the dense reference adjoint agrees too
        const auto gx_ref = conv2d_reference_input_grad(gy, decode_bank<float>(bank), g, xs);
        for (std::size_t i = 0; i < gx.data().size(); ++i) {
            REQUIRE(std::abs(gx.data()[i] - gx_ref.data()[i]) <= 1e-5f * std::max(1.0f, std::abs(gx.data()[i])));
        }
    }
}

TEST_CASE("input gradient special cases and finite differences") {
    const FilterBank one({1, 1, 1, 1}, Family::Haar, 0, 0, {1});
    BasicTensor4<float> dy({1, 1, 1, 1}, 2.5f);
    CHECK(conv2d_input_grad(dy, TernaryConvPlan(one), {1, 0}, {1, 1, 1, 1}).data()[0] == 2.5f);

    PatternRng rng(5);
    const auto bank = random_bank(rng, {3, 3, 2, 3});
    const TernaryConvPlan plan(bank);
    const Shape4 xs{1, 2, 6, 5};
    const Tensor4 zeros(conv_output_shape(xs, 3, 3, 3, {1, 1}));
    const auto gz = conv2d_input_grad(zeros, plan, {1, 1}, xs);
    CHECK(std::all_of(gz.data().begin(), gz.data().end(), [](float v) { return v == 0.0f; }));
    CHECK_THROWS_AS(conv2d_input_grad(Tensor4({1, 3, 2, 2}), plan, {1, 1}, xs), ShapeError);

    // Jacobian-vector products by central differences (double, step 1e-3)
    const ConvGeometry g{2, 1};
    const auto x = random_tensor<double>(xs, rng);
    const auto y = conv2d_ternary(x, plan, g);
    const auto gy = random_tensor<double>(y.shape(), rng);
    const auto gx = conv2d_input_grad(gy, plan, g, xs);
    for (int t = 0; t < 10; ++t) {
        const auto v = random_tensor<double>(xs, rng);
        BasicTensor4<double> xp(xs), xm(xs);
        const double h = 1e-3;
        for (std::size_t i = 0; i < v.data().size(); ++i) {
            xp.data()[i] = x.data()[i] + h * v.data()[i];
            xm.data()[i] = x.data()[i] - h * v.data()[i];
        }
        const double fd = (dot(conv2d_ternary(xp, plan, g), gy) - dot(conv2d_ternary(xm, plan, g), gy)) / (2 * h);
        const double analytic = dot(gx, v);
        REQUIRE(std::abs(fd - analytic) / std::max(1e-12, std::abs(analytic)) < 1e-4);
    }
}

TEST_CASE("sparsity") {
    const FilterBank zeros({3, 3, 1, 2}, Family::CsLbp, 0, 0, std::vector<std::int8_t>(18, 0));
    CHECK(sparsity(zeros) == 1.0);
    CHECK(sparsity(gen_filter_bank({3, 3, 2, 2}, Family::RandomBinary, 1)) == 0.0);
    double total = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) total += sparsity(gen_filter_bank({3, 3, 1, 1}, Family::CsLbp, seed));
    CHECK(total / 1000 >= 1.0 / 9.0);
}
