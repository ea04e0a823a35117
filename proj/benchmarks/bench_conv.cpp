#include <benchmark/benchmark.h>

#include "step/arch.hpp"
#include "step/conv.hpp"
#include "step/loss.hpp"
#include "step/model.hpp"
#include "step/pattern_gen.hpp"
#include "step/rng.hpp"

using namespace step;

namespace {

Tensor4 random_input(Shape4 s, std::uint64_t seed) {
    PatternRng rng(seed);
    Tensor4 x(s);
    for (auto& v : x.data()) v = static_cast<float>(2.0 * rng.uniform01() - 1.0);
    return x;
}

void set_items(benchmark::State& state, const Shape4& out) {
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

// Args: channels, spatial size, filters, family.
void BM_ConvReference(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const int s = static_cast<int>(state.range(1));
    const int f = static_cast<int>(state.range(2));
    const auto fam = static_cast<Family>(state.range(3));
    const auto x = random_input({8, c, s, s}, 1);
    const auto w = decode_bank<float>(gen_filter_bank({3, 3, c, f}, fam, 2));
    const ConvGeometry g{1, 1};
    Tensor4 y;
    for (auto _ : state) {
        y = conv2d_reference(x, w, g);
        benchmark::DoNotOptimize(y.data().data());
    }
    set_items(state, y.shape());
}

void BM_ConvTernary(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const int s = static_cast<int>(state.range(1));
    const int f = static_cast<int>(state.range(2));
    const auto fam = static_cast<Family>(state.range(3));
    const auto x = random_input({8, c, s, s}, 1);
    const TernaryConvPlan plan(gen_filter_bank({3, 3, c, f}, fam, 2));
    const ConvGeometry g{1, 1};
    Tensor4 y;
    for (auto _ : state) {
        y = conv2d_ternary(x, plan, g);
        benchmark::DoNotOptimize(y.data().data());
    }
    set_items(state, y.shape());
}

void conv_args(benchmark::internal::Benchmark* b) {
    for (int fam : {0, 1, 2}) {
        b->Args({16, 32, 32, fam});
        b->Args({64, 16, 64, fam});
    }
}

BENCHMARK(BM_ConvReference)->Apply(conv_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvTernary)->Apply(conv_args)->Unit(benchmark::kMicrosecond);

void BM_GenBank(benchmark::State& state) {
    const auto fam = static_cast<Family>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(gen_filter_bank({3, 3, 64, 128}, fam, ++seed));
    state.SetItemsProcessed(state.iterations() * 64 * 128);
}
BENCHMARK(BM_GenBank)->Arg(0)->Arg(1)->Arg(2);

void BM_DeskTrainStep(benchmark::State& state) {
    ArchConfig cfg;
    cfg.stages = {StageSpec{32}, StageSpec{64}, StageSpec{128}};
    cfg.seed = 2024;
    auto model = build_model(cfg);
    const auto x = random_input({64, 3, 32, 32}, 3);
    std::vector<int> labels(64);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 10);
    for (auto _ : state) {
        auto fwd = forward(model, x, Mode::Train);
        const auto loss = softmax_cross_entropy(fwd.logits, labels);
        benchmark::DoNotOptimize(backward(model, fwd.cache, loss.d_logits, 5e-4f));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_DeskTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
