#include "step/arch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace step {

using nlohmann::json;

std::string_view weight_mode_name(WeightMode m) noexcept {
    switch (m) {
        case WeightMode::Step: return "step";
        case WeightMode::FloatBaseline: return "float";
        case WeightMode::RandomBinary: return "random_binary";
    }
    return "unknown";
}

WeightMode parse_weight_mode(std::string_view name) {
    if (name == "step") return WeightMode::Step;
    if (name == "float" || name == "float_baseline") return WeightMode::FloatBaseline;
    if (name == "random_binary" || name == "binary") return WeightMode::RandomBinary;
    throw ContractError("unknown weight mode '" + std::string(name) + "'");
}

void ArchConfig::validate() const {
    if (stages.empty()) throw ContractError("architecture '" + name + "' has no stages");
    if (in_channels < 1 || in_height < 1 || in_width < 1) throw ContractError("input shape must be positive");
    if (num_classes < 2) throw ContractError("num_classes must be >= 2");
    if (head_width < 0) throw ContractError("head_width must be >= 0");
    if (!(leaky_slope > 0 && leaky_slope < 1)) throw ContractError("leaky_slope must lie in (0, 1)");
    int prev = 0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        const auto where = "stage " + std::to_string(i) + ": ";
        if (s.filters < 1 || s.kernel < 1 || s.stride < 1) throw ContractError(where + "sizes must be positive");
        if (s.filters < prev) throw ContractError(where + "filter count must not decrease with depth");
        if (mode == WeightMode::Step && s.kernel % 2 == 0) {
            throw ContractError(where + "STeP blocks need an odd kernel size for CS-LBP patterns");
        }
        prev = s.filters;
    }
}

ArchConfig ArchConfig::with_mode(WeightMode m) const {
    ArchConfig c = *this;
    c.mode = m;
    return c;
}

namespace {

json toml_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json j = json::object();
        for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
        return j;
    }
    if (const auto* a = node.as_array()) {
        json j = json::array();
        for (const auto& v : *a) j.push_back(toml_to_json(v));
        return j;
    }
    if (const auto* s = node.as_string()) return s->get();
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* f = node.as_floating_point()) return f->get();
    if (const auto* b = node.as_boolean()) return b->get();
    throw FormatError("unsupported TOML value type in architecture config");
}

template <class V>
V get_or(const json& j, const char* key, V fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<V>();
}

ArchConfig arch_from_json(const json& j) {
    static const char* kKnown[] = {"name",        "input",      "stages",      "head_width", "num_classes",
                                   "mode",        "seed",       "leaky_slope", "global_pool", "clamp_fusion"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(std::begin(kKnown), std::end(kKnown), k) == std::end(kKnown)) {
            throw FormatError("unknown architecture key '" + k + "'");
        }
    }
    ArchConfig c;
    c.name = get_or<std::string>(j, "name", c.name);
    if (j.contains("input")) {
        const auto in = j.at("input").get<std::vector<int>>();
        if (in.size() != 3) throw FormatError("input must be [channels, height, width]");
        c.in_channels = in[0];
        c.in_height = in[1];
        c.in_width = in[2];
    }
    c.head_width = get_or<int>(j, "head_width", c.head_width);
    c.num_classes = get_or<int>(j, "num_classes", c.num_classes);
    c.mode = parse_weight_mode(get_or<std::string>(j, "mode", "step"));
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.leaky_slope = get_or<double>(j, "leaky_slope", c.leaky_slope);
    c.global_pool = get_or<bool>(j, "global_pool", c.global_pool);
    c.clamp_fusion = get_or<bool>(j, "clamp_fusion", c.clamp_fusion);
    if (j.contains("stages")) {
        for (const auto& sj : j.at("stages")) {
            StageSpec s;
            s.filters = get_or<int>(sj, "filters", s.filters);
            s.kernel = get_or<int>(sj, "kernel", s.kernel);
            s.fusion = parse_fusion(get_or<std::string>(sj, "fusion", "conv1x1"));
            s.stride = get_or<int>(sj, "stride", s.stride);
            s.padding = get_or<int>(sj, "padding", s.padding);
            s.pool = get_or<int>(sj, "pool", s.pool);
            c.stages.push_back(s);
        }
    }
    return c;
}

/// Deterministic uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization of trainable weights.
void init_trainables(ModelGraph<float>& model, std::uint64_t seed) {
    PatternRng rng(mix64(seed ^ 0xA0761D6478BD642FULL));
    model.for_each_param([&](const std::string&, Parameter<float>& p) {
        if (p.dims.size() < 2) return;  // BN scale/shift and biases keep their defaults
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < p.dims.size(); ++d) fan_in *= static_cast<std::size_t>(p.dims[d]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : p.value) v = static_cast<float>((2.0 * rng.uniform01() - 1.0) * bound);
    });
}

}  // namespace

ArchConfig parse_arch_config(std::string_view text, ConfigFormat format) {
    json j;
    try {
        if (format == ConfigFormat::Toml) {
            j = toml_to_json(toml::parse(text));
        } else {
            j = json::parse(text);
        }
        auto cfg = arch_from_json(j);
        cfg.validate();
        return cfg;
    } catch (const toml::parse_error& e) {
        throw FormatError(std::string("TOML parse error: ") + std::string(e.description()));
    } catch (const json::exception& e) {
        throw FormatError(std::string("architecture config: ") + e.what());
    }
}

ArchConfig load_arch_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open architecture config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const auto fmt = path.extension() == ".toml" ? ConfigFormat::Toml : ConfigFormat::Json;
    return parse_arch_config(ss.str(), fmt);
}

std::string arch_config_to_json(const ArchConfig& c, int indent) {
    json j;
    j["name"] = c.name;
    j["input"] = {c.in_channels, c.in_height, c.in_width};
    j["mode"] = std::string(weight_mode_name(c.mode));
    j["seed"] = c.seed;
    j["num_classes"] = c.num_classes;
    j["head_width"] = c.head_width;
    j["leaky_slope"] = c.leaky_slope;
    j["global_pool"] = c.global_pool;
    j["clamp_fusion"] = c.clamp_fusion;
    j["stages"] = json::array();
    for (const auto& s : c.stages) {
        j["stages"].push_back({{"filters", s.filters},
                               {"kernel", s.kernel},
                               {"fusion", std::string(fusion_name(s.fusion))},
                               {"stride", s.stride},
                               {"padding", s.padding},
                               {"pool", s.pool}});
    }
    return j.dump(indent);
}

ModelGraph<float> build_model(const ArchConfig& cfg) {
    cfg.validate();
    ModelGraph<float> model({1, cfg.in_channels, cfg.in_height, cfg.in_width}, cfg.num_classes);
    const auto slope = static_cast<float>(cfg.leaky_slope);
    Shape4 shape{1, cfg.in_channels, cfg.in_height, cfg.in_width};
    auto push = [&](LayerNode<float> node) {
        try {
            shape = std::visit([&](const auto& l) { return l.output_shape(shape); }, node);
        } catch (const ShapeError& e) {
            throw ShapeError("layer " + std::to_string(model.layers().size()) + ": " + e.what());
        }
        model.add(std::move(node));
    };
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        const auto& st = cfg.stages[i];
        const ConvGeometry geom{st.stride, st.effective_padding()};
        const BankShape bank{st.kernel, st.kernel, shape.c, st.filters};
        const auto salt = static_cast<std::uint64_t>(i);
        switch (cfg.mode) {
            case WeightMode::Step:
                push(StepBlockLayer<float>(gen_filter_bank(bank, Family::CsLbp, cfg.seed, salt),
                                           gen_filter_bank(bank, Family::Haar, cfg.seed, salt), geom, st.fusion,
                                           cfg.clamp_fusion));
                break;
            case WeightMode::FloatBaseline:
                push(FloatConvLayer<float>(st.filters, shape.c, st.kernel, st.kernel, geom));
                break;
            case WeightMode::RandomBinary:
                push(TernaryConvLayer<float>(gen_filter_bank(bank, Family::RandomBinary, cfg.seed, salt), geom));
                break;
        }
        push(BatchNormLayer<float>(st.filters));
        push(LeakyReluLayer<float>(slope));
        if (st.pool > 1) push(AvgPoolLayer<float>(st.pool, st.pool));
    }
    if (cfg.global_pool && (shape.h > 1 || shape.w > 1)) {
        if (shape.h != shape.w) throw ShapeError("global pooling needs a square feature map");
        push(AvgPoolLayer<float>(shape.h, shape.h));
    }
    push(FlattenLayer<float>());
    if (cfg.head_width > 0) {
        push(DenseLayer<float>(shape.c, cfg.head_width));
        push(LeakyReluLayer<float>(slope));
    }
    push(DenseLayer<float>(shape.c, cfg.num_classes));
    init_trainables(model, cfg.seed);
    model.config_echo = arch_config_to_json(cfg, -1);
    model.validate();
    return model;
}

}  // namespace step
