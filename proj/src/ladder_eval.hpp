#pragma once

// Shared internals of the piecewise and projection drivers: input scaling and
// per-rung evaluation of the powered FFT convolutions ("moments").
//
// Ladder entries are powers of two or their midpoints, so each rung's powered
// operands derive from the previous power-of-two rung by one elementwise
// square (or z*sqrt(z) for midpoints); the chains match dyadic_pow bit for
// bit. One convolution workspace is reused across all rungs.

#include <functional>
#include <span>
#include <vector>

#include "maxconv/fft.hpp"
#include "maxconv/pnorm.hpp"
#include "maxconv/tensor.hpp"

namespace maxconv::pnorm::detail {

struct ScaledProblem {
    Tensor L, R;  // scaled so that each has maximum element exactly 1
    double scale_l = 1.0;
    double scale_r = 1.0;
};

/// Validates nonnegativity and rank, scales both operands to unit maximum.
/// Throws std::invalid_argument when either operand is all zero.
ScaledProblem scale_inputs(const Tensor& L, const Tensor& R);

/// Elementwise x^p via dyadic_pow.
std::vector<double> powered(std::span<const double> values, double pstar);

class LadderEvaluation {
public:
    /// retain: keep every rung's clamped moment array (projection needs the
    /// evenly spaced quartets); the streaming path holds only one rung.
    LadderEvaluation(const ScaledProblem& sp, std::span<const double> ladder, bool retain);

    /// Runs visit(i, clamped_moments) for every rung in ascending order.
    void for_each_rung(const std::function<void(std::size_t, std::span<const double>)>& visit);

    /// Retained mode: clamped moments of rung i, computing it on demand.
    /// Rungs must be first requested in ascending order (the lazy 2^-1 rung
    /// is the exception and may come last).
    const std::vector<double>& moments(std::size_t i);
    bool computed(std::size_t i) const { return i < store_.size() && !store_[i].empty(); }

    const fft::ConvolutionPlan& plan() const { return plan_; }
    std::size_t result_size() const { return plan_.result_size(); }
    std::size_t rungs() const { return ladder_.size(); }
    double pstar(std::size_t i) const { return ladder_[i]; }
    std::size_t fft_count() const { return fft_count_; }

private:
    void compute_powered(std::size_t i);  // points cur_a_/cur_b_ at rung i's operands
    void convolve_rung(std::vector<double>& out);

    const ScaledProblem& problem_;
    std::vector<double> ladder_;
    fft::ConvolutionPlan plan_;
    fft::ConvolutionPlan::Workspace workspace_;
    bool retain_;
    std::vector<std::vector<double>> store_;
    std::vector<double> streaming_buffer_;
    // Squaring-chain state: chain_* holds the operands at 2^chain_exp_;
    // mid_* holds midpoint operands z*sqrt(z).
    std::vector<double> chain_a_, chain_b_;
    std::vector<double> mid_a_, mid_b_;
    const std::vector<double>* cur_a_ = nullptr;
    const std::vector<double>* cur_b_ = nullptr;
    int chain_exp_ = 0;
    bool chain_valid_ = false;
    std::size_t fft_count_ = 0;
};

/// Exact per-index evaluator on the scaled problem (rank-general).
std::function<double(std::size_t)> make_exact_evaluator(const ScaledProblem& sp);

MaxConvResult assemble_result(const ScaledProblem& sp, const fft::ConvolutionPlan& plan,
                              Method method, std::span<const double> ladder,
                              ContourAssignment contour, std::vector<double> scaled_estimates,
                              std::vector<double> corrected, std::size_t fft_count,
                              std::size_t exact_evaluations);

}  // namespace maxconv::pnorm::detail
