#include "step/loss.hpp"

#include <cmath>
#include <string>

namespace step {

template <std::floating_point T>
int argmax_class(const BasicTensor4<T>& logits, int n) {
    const int classes = static_cast<int>(logits.shape().sample());
    const T* row = logits.sample(n);
    int best = 0;
    for (int j = 1; j < classes; ++j) {
        if (row[j] > row[best]) best = j;
    }
    return best;
}

template <std::floating_point T>
LossResult<T> softmax_cross_entropy(const BasicTensor4<T>& logits, std::span<const int> labels) {
    const auto& s = logits.shape();
    const int classes = static_cast<int>(s.sample());
    if (static_cast<int>(labels.size()) != s.n) {
        throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for a batch of " +
                         std::to_string(s.n));
    }
    if (s.n < 1 || classes < 1) throw ShapeError("cross entropy: empty logits");
    LossResult<T> out;
    out.d_logits = BasicTensor4<T>(s);
    double total = 0;
    std::vector<double> e(static_cast<std::size_t>(classes));
    for (int n = 0; n < s.n; ++n) {
        const int y = labels[static_cast<std::size_t>(n)];
        if (y < 0 || y >= classes) {
            throw ContractError("cross entropy: label " + std::to_string(y) + " outside [0, " +
                                std::to_string(classes) + ")");
        }
        const T* row = logits.sample(n);
        const int top = argmax_class(logits, n);
        if (top == y) ++out.correct;
        const double m = row[top];
        double rest = 0;  // sum of exp(l_j - m) over j != top
        for (int j = 0; j < classes; ++j) {
            e[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(row[j]) - m);
            if (j != top) rest += e[static_cast<std::size_t>(j)];
        }
        total += (m - static_cast<double>(row[y])) + std::log1p(rest);
        const double z = 1.0 + rest;
        T* d = out.d_logits.sample(n);
        for (int j = 0; j < classes; ++j) {
            const double p = e[static_cast<std::size_t>(j)] / z;
            d[j] = static_cast<T>((p - (j == y ? 1.0 : 0.0)) / s.n);
        }
    }
    out.loss = total / s.n;
    return out;
}

template LossResult<float> softmax_cross_entropy(const BasicTensor4<float>&, std::span<const int>);
template LossResult<double> softmax_cross_entropy(const BasicTensor4<double>&, std::span<const int>);
template int argmax_class(const BasicTensor4<float>&, int);
template int argmax_class(const BasicTensor4<double>&, int);

}  // namespace step
