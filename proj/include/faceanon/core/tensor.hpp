#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "faceanon/core/common.hpp"

namespace faceanon {

using Shape = std::vector<std::int64_t>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

/// Dense row-major tensor with value semantics. Images and feature maps use
/// NCHW (or CHW) layout throughout the library.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), T(0)) {}

    Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        require(static_cast<std::int64_t>(data_.size()) == shape_numel(shape_), "shape-mismatch",
                "tensor data size does not match shape " + shape_str(shape_));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, T v) { return Tensor(std::move(shape), v); }

    static Tensor scalar(T v) {
        Tensor t(Shape{});
        t.data_.assign(1, v);
        return t;
    }

    const Shape& shape() const noexcept { return shape_; }
    std::int64_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t ndim() const noexcept { return shape_.size(); }
    std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data_.size()); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    T& at2(std::int64_t i, std::int64_t j) { return data_[i * shape_[1] + j]; }
    const T& at2(std::int64_t i, std::int64_t j) const { return data_[i * shape_[1] + j]; }

    T& at3(std::int64_t c, std::int64_t h, std::int64_t w) {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    const T& at3(std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }

    T& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const T& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor reshaped(Shape s) const {
        require(shape_numel(s) == numel(), "shape-mismatch",
                "cannot reshape " + shape_str(shape_) + " to " + shape_str(s));
        Tensor out = *this;
        out.shape_ = std::move(s);
        return out;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    void add_(const Tensor& o) {
        require(same_shape(o), "shape-mismatch", "add_: shapes differ");
        for (std::int64_t i = 0; i < numel(); ++i) data_[i] += o.data_[i];
    }

    void scale_(T s) {
        for (auto& v : data_) v *= s;
    }

    T sum() const { return std::accumulate(data_.begin(), data_.end(), T(0)); }

    T min() const { return *std::min_element(data_.begin(), data_.end()); }
    T max() const { return *std::max_element(data_.begin(), data_.end()); }

    bool all_finite() const {
        for (auto v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    const std::vector<T>& storage() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.same_shape(b), "shape-mismatch", "max_abs_diff: shapes differ");
    T m = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <typename T>
double l2_dist(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.same_shape(b), "shape-mismatch", "l2_dist: shapes differ");
    double acc = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace faceanon
