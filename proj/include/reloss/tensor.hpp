#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "reloss/error.hpp"

namespace reloss {

// All tensors are rank 2. Vectors are stored as [1, n] or [n, 1].
struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t numel() const { return rows * cols; }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.numel(), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.numel()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + to_string(shape_));
        }
    }

    static Tensor row(std::initializer_list<T> values) {
        return Tensor({1, values.size()}, std::vector<T>(values));
    }
    static Tensor row(std::span<const T> values) {
        return Tensor({1, values.size()}, std::vector<T>(values.begin(), values.end()));
    }
    static Tensor column(std::span<const T> values) {
        return Tensor({values.size(), 1}, std::vector<T>(values.begin(), values.end()));
    }
    static Tensor scalar(T v) { return Tensor({1, 1}, std::vector<T>{v}); }

    const Shape& shape() const { return shape_; }
    std::size_t rows() const { return shape_.rows; }
    std::size_t cols() const { return shape_.cols; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
    T operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }

    T item() const {
        if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + to_string(shape_));
        return data_[0];
    }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    // Same data, new shape with equal element count.
    Tensor reshaped(Shape shape) const {
        if (shape.numel() != data_.size()) {
            throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
        }
        return Tensor(shape, data_);
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

}  // namespace reloss
