#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxconv {

/// Dense row-major tensor of finite real values. Rank-1 tensors double as
/// vectors throughout the library; every operation that needs nonnegative
/// input validates it at the call boundary (see require_nonnegative).
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    /// Rank-1 tensor from a flat list of values.
    static Tensor vector(std::vector<double> values);
    static Tensor zeros(std::vector<std::size_t> shape);

    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t flat) const { return values_[flat]; }
    double& operator[](std::size_t flat) { return values_[flat]; }

    double max_value() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

/// Throws std::invalid_argument when any element is negative.
void require_nonnegative(const Tensor& t, const std::string& name);

/// Row-major strides for a shape (stride of the last axis is 1).
std::vector<std::size_t> row_major_strides(std::span<const std::size_t> shape);

std::size_t shape_product(std::span<const std::size_t> shape);

/// Odometer-style increment of a row-major multi-index; returns false after
/// the last index wraps around.
bool next_index(std::span<std::size_t> index, std::span<const std::size_t> shape);

/// Full linear-convolution output shape: per-axis extA + extB - 1.
/// Throws std::invalid_argument on rank mismatch.
std::vector<std::size_t> convolution_shape(std::span<const std::size_t> a,
                                           std::span<const std::size_t> b);

}  // namespace maxconv
