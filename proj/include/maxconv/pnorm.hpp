#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "maxconv/tensor.hpp"

namespace maxconv::pnorm {

/// Numerical tolerances shared by the approximation pipeline.
/// tau is the underflow-stability threshold for FFT convolution values on a
/// unit-scaled problem; tau_div guards divisions in the projection formulas.
struct Params {
    double tau = 1e-12;
    double tau_div = 1e-10;
};

/// Ordered sequence of p* values evaluated by the piecewise methods.
///
/// powers_of_two(p*max) yields 2^0 .. 2^ceil(log2(p*max)). interleaved(p*max)
/// starts at 2^-1 and inserts the arithmetic mean between every adjacent pair
/// of powers of two (0.5, 0.75, 1, 1.5, 2, 3, 4, 6, 8, ...), which guarantees
/// four evenly spaced entries {maxP/4, maxP/2, 3maxP/4, maxP} below every
/// power of two maxP with ladder index >= 4.
class PStarLadder {
public:
    static PStarLadder powers_of_two(double pstar_max);
    static PStarLadder interleaved(double pstar_max);
    static PStarLadder single(double pstar);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }
    bool is_interleaved() const { return interleaved_; }

private:
    PStarLadder(std::vector<double> values, bool interleaved)
        : values_(std::move(values)), interleaved_(interleaved) {}
    std::vector<double> values_;
    bool interleaved_;
};

/// x^p and x^(1/p) specialized for ladder values p = 2^a or 3*2^a (integer a,
/// possibly negative), evaluated through exact square/sqrt/cbrt chains; any
/// other exponent falls back to std::pow.
double dyadic_pow(double x, double p);
double dyadic_root(double x, double p);

enum class Method { Fixed, Piecewise, PiecewiseAffine, ProjectionAffine };

const char* method_name(Method m);

/// Per-result-index choice of the underflow-stable ladder rung.
struct ContourAssignment {
    /// Rung whose value (or projection) the result uses; for the projection
    /// method this is the parity-rounded rung, otherwise the maximal stable
    /// rung. Contours group indices by this value.
    std::vector<std::int32_t> rung;
    /// Maximal underflow-stable ladder index before any parity rounding.
    std::vector<std::int32_t> stable_rung;
    /// Stability witness: the raw convolution value (||u||_p)^p at stable_rung.
    std::vector<double> witness;
    /// Set when no ladder rung passed the tau test; such indices emit the
    /// clamped rung-0 value.
    std::vector<std::uint8_t> fallback;
};

struct MaxConvResult {
    Tensor values;  ///< final approximation, rescaled by scale_l * scale_r
    ContourAssignment contour;
    Method method;
    std::vector<double> ladder;  ///< p* value per rung
    double scale_l = 1.0;
    double scale_r = 1.0;
    /// Scaled-problem estimates before affine correction (equal to
    /// values / (scale_l*scale_r) for methods without correction).
    std::vector<double> pre_correction;
    std::size_t fft_count = 0;         ///< FFT convolutions executed
    std::size_t exact_evaluations = 0; ///< single-index oracle calls consumed

    double pstar_at(std::size_t m) const { return ladder[contour.rung[m]]; }
};

/// Selection heuristic p*max = log(k) / log(1 + tau^(1/4)) for a result of
/// length k; the top-contour error then roughly matches tau^(1/4).
double select_pstar_max(std::size_t k, double tau);

/// Location of the worst-case middle-contour error bound,
/// log2(k) / log2(-(2 log2(k) - log2(tau)) / log2(tau)). Reporting only.
double pstar_mode_piecewise(std::size_t k, double tau);

/// Fixed underflow-stable p* absolute error bound k_m^(1/p*) - 1 (scaled problem).
double error_bound_fixed(std::size_t k_m, double pstar);

/// Middle-contour absolute error bound tau^(1/(2 p*)) (1 - k_m^(-1/p*)).
double error_bound_middle_contour(std::size_t k_m, double pstar, double tau);

/// Core estimate for one fixed p*: (FFT(L'^p*) conv (R'^p*))^(1/p*) with
/// negative convolution round-off clamped to zero before the root. Both
/// inputs must already be scaled to maximum element 1.
std::vector<double> max_convolve_given_pstar(const Tensor& L_scaled,
                                             const Tensor& R_scaled, double pstar);

/// Affine contour correction: for every contour (indices sharing a rung),
/// anchor an affine map on the exact values at the indices of minimal and
/// maximal approximate value and apply it across the contour. exact_at(m)
/// must return the exact max-convolution value of the same problem.
std::vector<double> affine_correct(std::span<const double> approx,
                                   std::span<const std::int32_t> rung,
                                   const std::function<double(std::size_t)>& exact_at,
                                   std::size_t* exact_calls = nullptr);

MaxConvResult fixed_pstar_max_convolve(const Tensor& L, const Tensor& R, double pstar,
                                       const Params& params = {});
MaxConvResult piecewise_max_convolve(const Tensor& L, const Tensor& R, double pstar_max,
                                     const Params& params = {});
MaxConvResult piecewise_affine_max_convolve(const Tensor& L, const Tensor& R,
                                            double pstar_max, const Params& params = {});

/// Equal-rank tensor entry point; Method::Fixed treats pstar_max as the
/// single p*. All methods accept tensors of any rank, so rank-1 calls are
/// identical to the vector entry points above.
MaxConvResult max_convolve_nd(const Tensor& L, const Tensor& R, Method method,
                              double pstar_max, const Params& params = {});

struct DeconvolveResult {
    Tensor values;
    /// Set when some transform denominator had magnitude below tau_div;
    /// the result is then numerically suspect.
    bool unstable = false;
};

/// Max-deconvolution: solves M = L maxconv R for R via the ratio of
/// transforms of the p*-th powers. Documented fragile; prefer well
/// conditioned (smooth, strictly positive) inputs.
DeconvolveResult max_deconvolve(const Tensor& M, const Tensor& L, double pstar,
                                const Params& params = {});

}  // namespace maxconv::pnorm
