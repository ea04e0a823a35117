#pragma once

#include <vector>

#include "step/tensor.hpp"

namespace step {

/// Images (n, c, h, w) with one integer class label per image.
struct LabeledImageBatch {
    Tensor4 images;
    std::vector<int> labels;

    int size() const noexcept { return static_cast<int>(labels.size()); }
};

/// Copies the given sample indices into a new batch.
LabeledImageBatch gather(const LabeledImageBatch& src, const std::vector<int>& indices);

/// First n samples (all of them when n <= 0 or n >= size).
LabeledImageBatch take_first(const LabeledImageBatch& src, int n);

}  // namespace step
