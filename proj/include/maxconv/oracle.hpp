#pragma once

#include <span>

#include "maxconv/tensor.hpp"

namespace maxconv::oracle {

/// Exact max-convolution of two nonnegative vectors, quadratic time:
/// result[m] = max over in-bounds l of L[l] * R[m - l].
Tensor naive_max_convolve(const Tensor& L, const Tensor& R);

/// Exact max-convolution value at a single result index, linear in the
/// overlap length k_m. Used for affine anchor points.
double max_convolution_at_index(const Tensor& L, const Tensor& R, std::size_t m);

/// Exact max-convolution of equal-rank nonnegative tensors.
Tensor naive_max_convolve_nd(const Tensor& L, const Tensor& R);

/// Exact value at a single result cell of an equal-rank tensor problem,
/// linear in the overlap cell count.
double max_convolution_at_cell(const Tensor& L, const Tensor& R,
                               std::span<const std::size_t> cell);

/// Overlap length k_m of the product vector u^(m) at result index m.
std::size_t overlap_length(std::size_t len_l, std::size_t len_r, std::size_t m);

/// Overlap cell count of u at a result cell of an equal-rank problem
/// (product of per-axis overlap lengths).
std::size_t overlap_count(std::span<const std::size_t> shape_l,
                          std::span<const std::size_t> shape_r,
                          std::span<const std::size_t> cell);

}  // namespace maxconv::oracle
