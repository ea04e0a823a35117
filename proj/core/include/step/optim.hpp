#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "step/model.hpp"

namespace step {

enum class Schedule { Cosine, Const };
enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    int epochs = 200;
    int batch_size = 128;
    double lr0 = 0.1;
    double weight_decay = 5e-4;
    Schedule schedule = Schedule::Cosine;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    std::uint64_t seed = 0;
    bool augment = true;  // pad-then-crop plus horizontal flip
    int augment_pad = 4;
    bool quantized_eval = false;  // evaluate with the rounded LeakyReLU
    int eval_batch = 256;

    void validate() const;
};

/// lr0 * 0.5 * (1 + cos(pi * epoch / epochs)) under Cosine; lr0 under Const.
double learning_rate(const TrainConfig& cfg, int epoch);

/**
 * Plain SGD (w -= lr * g) or Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias
 * corrected). Parameters flagged clamp_unit are clipped to [-1, 1] after the
 * update. Gradients are expected to already contain the weight-decay term.
 */
template <std::floating_point T>
class Optimizer {
public:
    explicit Optimizer(OptimizerKind kind) : kind_(kind) {}

    void step(ModelGraph<T>& model, const Gradients<T>& grads, double lr);

    /// Single-parameter update; `key` identifies the Adam moment buffers and step count.
    void update(const std::string& key, Parameter<T>& p, const std::vector<T>& grad, double lr);

    std::int64_t steps() const noexcept { return t_; }

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

private:
    OptimizerKind kind_;
    std::int64_t t_ = 0;
    std::map<std::string, std::vector<double>> m_;
    std::map<std::string, std::vector<double>> v_;
    std::map<std::string, std::int64_t> updates_;  // per-key Adam step for bias correction
};

}  // namespace step
