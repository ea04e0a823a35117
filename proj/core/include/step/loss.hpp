#pragma once

#include <span>

#include "step/tensor.hpp"

namespace step {

template <std::floating_point T>
struct LossResult {
    double loss = 0;            // mean over the batch
    BasicTensor4<T> d_logits;   // (softmax - onehot) / n
    int correct = 0;            // argmax hits, ties resolved to the lowest class
};

/// Max-subtracted softmax cross-entropy over logits of shape (n, C, 1, 1).
template <std::floating_point T>
LossResult<T> softmax_cross_entropy(const BasicTensor4<T>& logits, std::span<const int> labels);

/// Index of the largest logit of sample n (lowest index on ties).
template <std::floating_point T>
int argmax_class(const BasicTensor4<T>& logits, int n);

}  // namespace step
