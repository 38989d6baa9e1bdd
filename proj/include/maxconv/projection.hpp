#pragma once

#include <optional>
#include <span>

#include "maxconv/pnorm.hpp"
#include "maxconv/tensor.hpp"

namespace maxconv::projection {

/// Four evenly spaced moments of a nonnegative vector u:
/// est_i = (||u||_{i*s})^{i*s} at p-norm spacing s > 0.
struct MomentQuartet {
    double est1 = 0.0;
    double est2 = 0.0;
    double est3 = 0.0;
    double est4 = 0.0;
    double spacing = 1.0;
};

/// Coefficients of the null-space spanning vector of the 2x3 moment Hankel
/// matrix; the roots of g0 + g1 x + g2 x^2 recover the two projected values.
struct GammaCoefficients {
    double g0 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
};

GammaCoefficients gamma_from_moments(const MomentQuartet& q);

/// Larger root of the projection quadratic, or nullopt when the quadratic is
/// not numerically well defined (g2 <= tau_div or negative discriminant).
std::optional<double> largest_quadratic_root(const MomentQuartet& q, double tau_div);

/// Linear projection fallback: (est4/est3)^(1/spacing), degrading to
/// est4^(1/spacing) when est3 is within tau_div of zero.
double max_lin(double est3, double est4, double spacing, double tau_div);

/// Quadratic projection of the maximum; falls through to max_lin whenever
/// the quadratic is unstable, so it never throws.
double max_quad(const MomentQuartet& q, double tau_div);

/// Estimate/true-maximum ratio before the final root (the t statistic used
/// for the conjectured bound t in (0.7, 1]). v must be unit-scaled; inputs
/// without two distinct values are flagged degenerate and return 1.
double t_ratio(std::span<const double> v, double spacing, bool* degenerate = nullptr,
               double tau_div = 1e-10);

/// p*max needed for a target top-contour relative error:
/// 4 log(0.7) / log(1 - eps), valid for eps in (0, 0.3).
double projection_pstar_max_for_error(double eps);

/// Location of the worst-case absolute error bound
/// tau^(1/(2 p*)) (1 - 0.7^(4/p*)); approximately 14.52 at tau = 1e-12.
double projection_error_mode(double tau);

/// Piecewise max-convolution driven by the interleaved ladder; per index the
/// maximal stable rung is rounded down to a power of two maxP and the
/// estimate comes from the quadratic projection over the moments at
/// {maxP/4, maxP/2, 3maxP/4, maxP} (linear or plain fallbacks when fewer
/// stable rungs exist), followed by affine contour correction.
pnorm::MaxConvResult projection_max_convolve(const Tensor& L, const Tensor& R,
                                             double pstar_max = 64.0,
                                             const pnorm::Params& params = {});

}  // namespace maxconv::projection
