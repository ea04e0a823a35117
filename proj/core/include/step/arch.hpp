#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "step/model.hpp"

namespace step {

enum class WeightMode { Step, FloatBaseline, RandomBinary };

std::string_view weight_mode_name(WeightMode m) noexcept;
WeightMode parse_weight_mode(std::string_view name);

struct StageSpec {
    int filters = 16;
    int kernel = 3;
    Fusion fusion = Fusion::Conv1x1;
    int stride = 1;
    int padding = -1;  // -1: kernel / 2 ("same" at stride 1)
    int pool = 2;      // average-pool window and stride; <= 1 disables pooling

    int effective_padding() const noexcept { return padding < 0 ? kernel / 2 : padding; }
};

/**
 * Declarative network description. Each stage becomes a spatial block
 * (STeP block, float conv or random-binary conv depending on `mode`) followed
 * by batch norm, LeakyReLU and optional average pooling. The head is a global
 * average pool, an optional hidden dense layer and the classifier.
 */
struct ArchConfig {
    std::string name = "custom";
    int in_channels = 3;
    int in_height = 32;
    int in_width = 32;
    std::vector<StageSpec> stages;
    int head_width = 0;
    int num_classes = 10;
    WeightMode mode = WeightMode::Step;
    std::uint64_t seed = 0;
    double leaky_slope = 0.01;
    bool global_pool = true;
    bool clamp_fusion = true;

    /// Throws ContractError on an empty stage list, decreasing filter counts or bad sizes.
    void validate() const;

    /// Same topology with a different weight mode.
    ArchConfig with_mode(WeightMode m) const;
};

enum class ConfigFormat { Json, Toml };

ArchConfig parse_arch_config(std::string_view text, ConfigFormat format);
/// Parsed configs are validated. Format picked from the extension (.toml, anything else is JSON).
ArchConfig load_arch_config(const std::filesystem::path& path);
std::string arch_config_to_json(const ArchConfig& cfg, int indent = 2);

ModelGraph<float> build_model(const ArchConfig& cfg);

}  // namespace step
