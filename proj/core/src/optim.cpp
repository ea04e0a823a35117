#include "step/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace step {

void TrainConfig::validate() const {
    if (!(lr0 >= 0)) throw ContractError("learning rate must be non-negative");
    if (batch_size < 1) throw ContractError("batch size must be >= 1");
    if (epochs < 0) throw ContractError("epochs must be >= 0");
    if (weight_decay < 0) throw ContractError("weight decay must be >= 0");
    if (augment_pad < 0) throw ContractError("augmentation padding must be >= 0");
}

double learning_rate(const TrainConfig& cfg, int epoch) {
    if (cfg.schedule == Schedule::Const || cfg.epochs <= 0) return cfg.lr0;
    const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
    return cfg.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

template <std::floating_point T>
void Optimizer<T>::update(const std::string& key, Parameter<T>& p, const std::vector<T>& grad, double lr) {
    if (grad.size() != p.size()) throw ShapeError("optimizer: gradient size mismatch for " + key);
    if (kind_ == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < grad.size(); ++i) p.value[i] -= static_cast<T>(lr * grad[i]);
    } else {
        auto& m = m_[key];
        auto& v = v_[key];
        if (m.size() != p.size()) {
            m.assign(p.size(), 0.0);
            v.assign(p.size(), 0.0);
        }
        const double t = static_cast<double>(++updates_[key]);
        const double c1 = 1.0 - std::pow(kBeta1, t);
        const double c2 = 1.0 - std::pow(kBeta2, t);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double g = grad[i];
            m[i] = kBeta1 * m[i] + (1 - kBeta1) * g;
            v[i] = kBeta2 * v[i] + (1 - kBeta2) * g * g;
            const double mh = m[i] / c1;
            const double vh = v[i] / c2;
            p.value[i] -= static_cast<T>(lr * mh / (std::sqrt(vh) + kEps));
        }
    }
    if (p.clamp_unit) {
        for (auto& w : p.value) w = std::clamp(w, T{-1}, T{1});
    }
}

template <std::floating_point T>
void Optimizer<T>::step(ModelGraph<T>& model, const Gradients<T>& grads, double lr) {
    ++t_;
    model.for_each_param([&](const std::string& key, Parameter<T>& p) {
        if (!p.trainable) return;
        const auto it = grads.find(key);
        if (it == grads.end()) throw ContractError("optimizer: missing gradient for " + key);
        update(key, p, it->second, lr);
    });
    model.mark_updated();
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace step
