#include "maxconv/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace maxconv {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.empty()) {
        throw std::invalid_argument("tensor shape must have at least one axis");
    }
    for (std::size_t ext : shape_) {
        if (ext == 0) {
            throw std::invalid_argument("tensor extents must be positive");
        }
    }
    if (values_.size() != shape_product(shape_)) {
        throw std::invalid_argument("tensor value count does not match shape");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("tensor values must be finite");
        }
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

double Tensor::max_value() const {
    return *std::max_element(values_.begin(), values_.end());
}

void require_nonnegative(const Tensor& t, const std::string& name) {
    for (double v : t.values()) {
        if (v < 0.0) {
            throw std::invalid_argument(name + " must be nonnegative");
        }
    }
}

std::vector<std::size_t> row_major_strides(std::span<const std::size_t> shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t d = shape.size(); d-- > 1;) {
        strides[d - 1] = strides[d] * shape[d];
    }
    return strides;
}

std::size_t shape_product(std::span<const std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t ext : shape) n *= ext;
    return n;
}

bool next_index(std::span<std::size_t> index, std::span<const std::size_t> shape) {
    for (std::size_t d = index.size(); d-- > 0;) {
        if (++index[d] < shape[d]) return true;
        index[d] = 0;
    }
    return false;
}

std::vector<std::size_t> convolution_shape(std::span<const std::size_t> a,
                                           std::span<const std::size_t> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("convolution operands must have equal rank");
    }
    std::vector<std::size_t> out(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) {
        out[d] = a[d] + b[d] - 1;
    }
    return out;
}

}  // namespace maxconv
