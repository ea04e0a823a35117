#include "doctest.h"

#include <cmath>
#include "json.hpp"
#include <string>
#include <vector>

#include "step/accounting.hpp"
#include "step/arch.hpp"
#include "step/checkpoint.hpp"
#include "step/error.hpp"
#include "step/pattern_gen.hpp"

using namespace step;

namespace {

std::filesystem::path config_path(const char* name) { return std::filesystem::path(STEP_SOURCE_DIR) / "configs" / name; }

AccountingReport counts_row(const char* name, std::int64_t trainable, std::int64_t ternary, std::int64_t binary = 0) {
    ParamCensus c;
    c.trainable = trainable;
    c.ternary = ternary;
    c.binary = binary;
    return make_report(name, c);
}

ArchConfig small_config(int stages) {
    ArchConfig cfg;
    cfg.in_height = cfg.in_width = 16;
    cfg.seed = 11;
    for (int i = 0; i < stages; ++i) cfg.stages.push_back({8 << i, 3, Fusion::Conv1x1, 1, -1, 2});
    return cfg;
}

// Closed-form census of the desk topology, written out by hand.
struct DeskOracle {
    std::int64_t step_trainable = 0, step_ternary = 0, float_trainable = 0;
};

DeskOracle desk_oracle() {
    DeskOracle o;
    const int filters[] = {32, 64, 128};
    int c = 3;
    for (int f : filters) {
        o.step_trainable += 2LL * f * f + 2LL * f;  // 1x1 fusion over 2f channels, BN gamma/beta
        o.step_ternary += 2LL * 9 * c * f;          // CS-LBP and Haar banks
        o.float_trainable += 9LL * c * f + 2LL * f;
        c = f;
    }
    o.step_trainable += 128 * 10 + 10;
    o.float_trainable += 128 * 10 + 10;
    return o;
}

}  // namespace

TEST_CASE("memory rule on literal counts") {
    CHECK(counts_row("x", 1, 0).memory_bytes == 4);
    ParamCensus c;
    c.ternary = 5;  // 10 bits -> 2 bytes
    CHECK(estimate_memory_bytes(c) == 2);
    c = {};
    c.binary = 9;  // 9 bits -> 2 bytes
    CHECK(estimate_memory_bytes(c) == 2);
    CHECK(round_decimals(10.05, 1) == doctest::Approx(10.1));
    CHECK(round_decimals(-2.25, 1) == doctest::Approx(-2.3));
}

TEST_CASE("full-precision model rows") {
    CHECK(std::abs(counts_row("vgg", 14728266, 0).memory_mb() - 58.9) <= 0.1);
    CHECK(std::abs(counts_row("resnet", 23520842, 0).memory_mb() - 94.1) <= 0.1);
    CHECK(std::abs(counts_row("mbv2", 2360668, 0).memory_mb() - 9.4) <= 0.1);
    CHECK(std::abs(counts_row("effnet", 3598598, 0).memory_mb() - 14.3) <= 0.1);
}

TEST_CASE("STeP model rows") {
    const auto vgg = counts_row("vgg", 1652490, 13934754);
    const auto resnet = counts_row("resnet", 13463114, 11318976);
    const auto mbv2 = counts_row("mbv2", 1268858, 1091810);
    const auto eff = counts_row("eff", 1932806, 1644578);
    // 1652490 * 4 + ceil(13934754 / 4)
    CHECK(vgg.memory_bytes == 6609960ULL + 3483689ULL);
    CHECK(std::abs(vgg.memory_mb() - 10.1) <= 0.2);
    CHECK(std::abs(resnet.memory_mb() - 56.6) <= 0.2);
    CHECK(std::abs(mbv2.memory_mb() - 5.3) <= 0.2);
    CHECK(std::abs(eff.memory_mb() - 8.1) <= 0.2);

    CHECK(std::abs(reduction_percent(vgg, counts_row("o", 14728266, 0)) - 82.8) <= 0.1);
    CHECK(std::abs(reduction_percent(resnet, counts_row("o", 23520842, 0)) - 39.8) <= 0.1);
}

TEST_CASE("random-binary rows use one bit per frozen weight") {
    const auto vgg = counts_row("vgg", 13578, 0, 14710464);
    CHECK(vgg.memory_bytes == 13578ULL * 4 + 14710464ULL / 8);
    CHECK(std::abs(vgg.memory_mb() - 1.89) <= 0.01);
    CHECK(std::abs(counts_row("mbv2", 859034, 0, 1437888).memory_mb() - 3.6) <= 0.1);
    CHECK(std::abs(counts_row("eff", 1932806, 0, 1563938).memory_mb() - 7.9) <= 0.1);
}

TEST_CASE("reduction percent edge cases") {
    const auto a = counts_row("a", 100, 40);
    CHECK(reduction_percent(a, a) == 0.0);
    CHECK(trainable_reduction_percent(a, a) == 0.0);
    const auto zero = counts_row("z", 0, 0);
    CHECK_THROWS_AS(reduction_percent(a, zero), ContractError);
    CHECK_THROWS_AS(trainable_reduction_percent(a, zero), ContractError);
    auto b = counts_row("b", 50, 40);
    attach_baseline(b, a);
    REQUIRE(b.trainable_reduction_pct);
    CHECK(*b.trainable_reduction_pct == doctest::Approx(50.0));
    CHECK(b.baseline_name == "a");
}

TEST_CASE("detection budget arithmetic") {
    const auto det = describe_step_det_budget();
    CHECK(det.census.trainable == 232492);
    CHECK(det.census.ternary == 3738560);
    CHECK(det.memory_bytes == 232492ULL * 4 + 3738560ULL / 4);
    CHECK(round_decimals(det.memory_mb(), 2) == doctest::Approx(1.86));
}

TEST_CASE("census of hand-built graphs") {
    ModelGraph<float> dense({1, 10, 1, 1}, 5);
    dense.add(FlattenLayer<float>());
    dense.add(DenseLayer<float>(10, 5));
    auto c = count_params(dense);
    CHECK(c.trainable == 55);
    CHECK(c.non_trainable() == 0);

    ModelGraph<float> tern({1, 1, 8, 8}, 8);
    tern.add(TernaryConvLayer<float>(gen_filter_bank({3, 3, 1, 8}, Family::Haar, 1), ConvGeometry{1, 1}));
    c = count_params(tern);
    CHECK(c.trainable == 0);
    CHECK(c.ternary == 72);

    ModelGraph<float> frozen({1, 2, 8, 8}, 4);
    FloatConvLayer<float> conv(4, 2, 3, 3, ConvGeometry{1, 1});
    conv.weight.trainable = false;
    frozen.add(conv);
    c = count_params(frozen);
    CHECK(c.trainable == 0);
    CHECK(c.frozen_float == 72);
    CHECK(estimate_memory_bytes(c) == 72 * 4);
}

TEST_CASE("one-stage STeP network has two frozen banks and one fusion") {
    const auto m = build_model(small_config(1));
    CHECK(m.frozen_banks().size() == 2);
    int fusions = 0;
    for (const auto& node : m.layers()) {
        if (const auto* b = std::get_if<StepBlockLayer<float>>(&node)) {
            fusions += b->fusion == Fusion::Conv1x1;
            CHECK(b->fuse.weight.dims == std::vector<int>{8, 16});
        }
    }
    CHECK(fusions == 1);
}

TEST_CASE("building twice gives identical serialized models") {
    const auto cfg = small_config(2);
    CHECK(encode_checkpoint(build_model(cfg), 0) == encode_checkpoint(build_model(cfg), 0));
    auto other = cfg;
    other.seed += 1;
    CHECK(encode_checkpoint(build_model(cfg), 0) != encode_checkpoint(build_model(other), 0));
}

TEST_CASE("weight modes share the shape walk") {
    const auto cfg = small_config(3);
    const auto walk = build_model(cfg).shape_walk(2);
    CHECK(build_model(cfg.with_mode(WeightMode::FloatBaseline)).shape_walk(2) == walk);
    CHECK(build_model(cfg.with_mode(WeightMode::RandomBinary)).shape_walk(2) == walk);
    CHECK(walk.back() == Shape4{2, 10, 1, 1});
}

TEST_CASE("STeP mode has no trainable spatial kernels") {
    const auto m = build_model(small_config(3));
    m.for_each_param([](const std::string& key, const Parameter<float>& p) {
        if (!p.trainable) return;
        INFO(key);
        CHECK(p.dims.size() <= 2);
    });
    const auto c = count_params(m);
    CHECK(c.binary == 0);
    CHECK(c.frozen_float == 0);
    const auto rb = count_params(build_model(small_config(3).with_mode(WeightMode::RandomBinary)));
    CHECK(rb.ternary == 0);
    CHECK(rb.binary > 0);
}

TEST_CASE("counts grow with depth") {
    ParamCensus prev;
    for (int s = 1; s <= 4; ++s) {
        const auto c = count_params(build_model(small_config(s)));
        CHECK(c.trainable >= prev.trainable);
        CHECK(c.ternary > prev.ternary);
        prev = c;
    }
}

TEST_CASE("desk configuration census and reduction") {
    const auto cfg = load_arch_config(config_path("desk_step.toml"));
    const auto oracle = desk_oracle();
    const auto step_c = count_params(build_model(cfg));
    const auto float_c = count_params(build_model(cfg.with_mode(WeightMode::FloatBaseline)));
    CHECK(step_c.trainable == oracle.step_trainable);
    CHECK(step_c.ternary == oracle.step_ternary);
    CHECK(float_c.trainable == oracle.float_trainable);
    CHECK(float_c.non_trainable() == 0);

    auto step_r = make_report("step", step_c);
    const auto float_r = make_report("float", float_c);
    attach_baseline(step_r, float_r);
    const double red = *step_r.trainable_reduction_pct;
    CHECK(red >= 40.0);
    CHECK(red <= 80.0);
    CHECK(red == doctest::Approx(52.78065047170807).epsilon(1e-12));
    CHECK(*step_r.reduction_pct > 0.0);
}

TEST_CASE("config parsing") {
    const auto toml = load_arch_config(config_path("desk_step.toml"));
    CHECK(toml.name == "desk-step");
    CHECK(toml.seed == 2024);
    REQUIRE(toml.stages.size() == 3);
    CHECK(toml.stages[2].filters == 128);

    // The JSON echo parses back to the same network.
    const auto echo = parse_arch_config(arch_config_to_json(toml), ConfigFormat::Json);
    CHECK(encode_checkpoint(build_model(echo), 0) == encode_checkpoint(build_model(toml), 0));

    const auto add = load_arch_config(config_path("desk_step_add.json"));
    CHECK(add.stages[0].fusion == Fusion::Add);
    CHECK(count_params(build_model(add)).trainable < count_params(build_model(toml)).trainable);

    CHECK_THROWS_AS(parse_arch_config(R"({"stages": [{"filters": 8}], "bogus": 1})", ConfigFormat::Json),
                    FormatError);
    CHECK_THROWS_AS(parse_arch_config("stages = []\n", ConfigFormat::Toml), ContractError);
    CHECK_THROWS_AS(parse_arch_config(R"({"stages": [{"filters": 16}, {"filters": 8}]})", ConfigFormat::Json),
                    ContractError);
    CHECK_THROWS_AS(parse_arch_config(R"({"stages": [{"filters": 8, "kernel": 4}]})", ConfigFormat::Json),
                    ContractError);
    CHECK_THROWS_AS(parse_arch_config("{not json", ConfigFormat::Json), FormatError);
}

TEST_CASE("report rendering") {
    auto s = counts_row("STeP", 1652490, 13934754);
    attach_baseline(s, counts_row("Original", 14728266, 0));
    const auto j = nlohmann::json::parse(reports_to_json({s}));
    CHECK(j["schema"] == "step-accounting");
    REQUIRE(j["reports"].size() == 1);
    CHECK(j["reports"][0]["name"] == "STeP");
    CHECK(j["reports"][0]["trainable"] == 1652490);
    CHECK(j["reports"][0]["baseline"] == "Original");
    const auto table = reports_to_table({s});
    CHECK(table.find("Memory (MB)") != std::string::npos);
    CHECK(table.find("10.1") != std::string::npos);
    CHECK(table.find("82.9") != std::string::npos);
}
