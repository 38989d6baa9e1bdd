#pragma once

#include <memory>
#include <span>
#include <vector>

#include "maxconv/tensor.hpp"

namespace maxconv::fft {

/// Precomputed transform state for full linear convolution of two fixed
/// shapes. Each axis is zero-padded to the next power of two >= extA+extB-1.
///
/// Plans are immutable after construction and convolve() is safe to call
/// concurrently from multiple threads; results are deterministic and
/// bit-identical between a reused and a freshly built plan.
class ConvolutionPlan {
public:
    /// Owns the padded operand and scratch buffers for repeated convolutions
/// under one plan; reusing it across calls keeps the pad regions zeroed
    /// and the pages cache-resident.
    class Workspace {
    public:
        ~Workspace();
        Workspace(Workspace&&) noexcept;
        Workspace& operator=(Workspace&&) noexcept;

    private:
        friend class ConvolutionPlan;
        struct Impl;
        explicit Workspace(std::unique_ptr<Impl> impl);
        std::unique_ptr<Impl> impl_;
    };

    ConvolutionPlan(std::vector<std::size_t> shape_a, std::vector<std::size_t> shape_b);
    ~ConvolutionPlan();

    ConvolutionPlan(ConvolutionPlan&&) noexcept;
    ConvolutionPlan& operator=(ConvolutionPlan&&) noexcept;
    ConvolutionPlan(const ConvolutionPlan&) = delete;
    ConvolutionPlan& operator=(const ConvolutionPlan&) = delete;

    /// Full linear convolution, row-major values of result_shape(). Tiny
    /// negative round-off values are returned as-is; callers clamp.
    std::vector<double> convolve(std::span<const double> a, std::span<const double> b) const;

    Workspace make_workspace() const;
    /// As convolve(), but reusing caller-held buffers; out must have
    /// result_size() elements.
    void convolve_into(Workspace& ws, std::span<const double> a, std::span<const double> b,
                       std::span<double> out) const;

    const std::vector<std::size_t>& result_shape() const;
    std::size_t result_size() const;
    const std::vector<std::size_t>& padded_shape() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot full linear convolution of two vectors.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

/// One-shot full linear convolution of two equal-rank tensors; the result
/// shape is convolution_shape(a.shape(), b.shape()).
std::vector<double> fft_convolve_nd(const Tensor& a, const Tensor& b);

}  // namespace maxconv::fft
