#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "step/error.hpp"

namespace step {

struct Shape4 {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
    std::size_t sample() const noexcept { return static_cast<std::size_t>(c) * plane(); }

    bool operator==(const Shape4&) const = default;
};

std::string to_string(const Shape4& s);

/// Dense N x C x H x W activations, row-major.
template <std::floating_point T>
class BasicTensor4 {
public:
    using value_type = T;

    BasicTensor4() = default;
    explicit BasicTensor4(Shape4 shape, T fill = T{0}) : shape_(shape) {
        if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) throw ShapeError("negative tensor dimension");
        data_.assign(shape.size(), fill);
    }
    BasicTensor4(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.size()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             to_string(shape_));
        }
    }

    /// Element-wise precision conversion.
    template <std::floating_point U>
    static BasicTensor4 cast_from(const BasicTensor4<U>& other) {
        std::vector<T> d(other.data().begin(), other.data().end());
        return BasicTensor4(other.shape(), std::move(d));
    }

    const Shape4& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }

    std::size_t offset(int n, int c, int y, int x) const noexcept {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }
    T& at(int n, int c, int y, int x) noexcept { return data_[offset(n, c, y, x)]; }
    T at(int n, int c, int y, int x) const noexcept { return data_[offset(n, c, y, x)]; }

    T* sample(int n) noexcept { return data_.data() + static_cast<std::size_t>(n) * shape_.sample(); }
    const T* sample(int n) const noexcept { return data_.data() + static_cast<std::size_t>(n) * shape_.sample(); }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    bool operator==(const BasicTensor4&) const = default;

private:
    Shape4 shape_;
    std::vector<T> data_;
};

using Tensor4 = BasicTensor4<float>;

}  // namespace step
