#include "maxconv/projection.hpp"

#include <algorithm>
#include <cmath>

#include "ladder_eval.hpp"

namespace maxconv::projection {

GammaCoefficients gamma_from_moments(const MomentQuartet& q) {
    GammaCoefficients g;
    g.g2 = q.est1 * q.est3 - q.est2 * q.est2;
    g.g1 = q.est2 * q.est3 - q.est1 * q.est4;
    g.g0 = q.est2 * q.est4 - q.est3 * q.est3;
    return g;
}

std::optional<double> largest_quadratic_root(const MomentQuartet& q, double tau_div) {
    GammaCoefficients g = gamma_from_moments(q);
    double pre_root = g.g1 * g.g1 - 4.0 * g.g2 * g.g0;
    // g2 is the divisor and is >= 0 for moments of any nonnegative vector,
    // so the larger root always takes the + branch.
    if (!(g.g2 > tau_div) || pre_root < 0.0) return std::nullopt;
    return (-g.g1 + std::sqrt(pre_root)) / (2.0 * g.g2);
}

double max_lin(double est3, double est4, double spacing, double tau_div) {
    double ratio = std::abs(est3) > tau_div ? est4 / est3 : est4;
    return pnorm::dyadic_root(std::max(ratio, 0.0), spacing);
}

double max_quad(const MomentQuartet& q, double tau_div) {
    if (auto root = largest_quadratic_root(q, tau_div)) {
        return pnorm::dyadic_root(std::max(*root, 0.0), q.spacing);
    }
    return max_lin(q.est3, q.est4, q.spacing, tau_div);
}

double t_ratio(std::span<const double> v, double spacing, bool* degenerate, double tau_div) {
    if (degenerate) *degenerate = false;
    if (v.empty()) throw std::invalid_argument("t_ratio requires a nonempty vector");
    double mx = *std::max_element(v.begin(), v.end());
    if (std::abs(mx - 1.0) > 1e-9) {
        throw std::invalid_argument("t_ratio requires a unit-scaled vector");
    }
    MomentQuartet q{0.0, 0.0, 0.0, 0.0, spacing};
    for (double x : v) {
        double x1 = pnorm::dyadic_pow(x, spacing);
        double x2 = x1 * x1;
        q.est1 += x1;
        q.est2 += x2;
        q.est3 += x1 * x2;
        q.est4 += x2 * x2;
    }
    if (auto root = largest_quadratic_root(q, tau_div)) return *root;
    if (degenerate) *degenerate = true;
    return 1.0;
}

double projection_pstar_max_for_error(double eps) {
    if (!(eps > 0.0 && eps < 0.3)) {
        throw std::invalid_argument("target relative error must lie in (0, 0.3)");
    }
    return 4.0 * std::log(0.7) / std::log1p(-eps);
}

double projection_error_mode(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
    double lt = std::log(tau);
    double denom = (lt - 2.8534) * std::log1p(-2.8534 / lt);
    if (denom == 0.0 || !std::isfinite(denom)) {
        throw std::domain_error("projection_error_mode out of domain");
    }
    return (1.4267 * lt - 4.07094) / denom;
}

pnorm::MaxConvResult projection_max_convolve(const Tensor& L, const Tensor& R, double pstar_max,
                                             const pnorm::Params& params) {
    using pnorm::detail::LadderEvaluation;
    if (!(params.tau > 0.0 && params.tau < 1.0)) {
        throw std::invalid_argument("tau must lie in (0, 1)");
    }
    auto ladder = pnorm::PStarLadder::interleaved(pstar_max);
    auto sp = pnorm::detail::scale_inputs(L, R);
    LadderEvaluation ev(sp, ladder.values(), /*retain=*/true);
    // Rung 0 (p* = 2^-1) only backs indices with no stable rung at p* >= 1;
    // its transform runs on demand below.

    const std::size_t n = ev.result_size();
    pnorm::ContourAssignment ca;
    ca.rung.resize(n);
    ca.stable_rung.assign(n, -1);
    ca.witness.resize(n);
    ca.fallback.assign(n, 0);
    std::vector<double> estimates(n);

    // Streaming upward sweeps; the last stable rung seen per index wins.
    for (std::size_t i = 1; i < ladder.size(); ++i) {
        const auto& vm = ev.moments(i);
        for (std::size_t m = 0; m < n; ++m) {
            if (vm[m] >= params.tau) {
                ca.stable_rung[m] = static_cast<std::int32_t>(i);
                ca.witness[m] = vm[m];
            }
        }
    }

    for (std::size_t m = 0; m < n; ++m) {
        if (ca.stable_rung[m] < 0) {
            // Nothing at p* >= 3/4 is stable; fall back to the 2^-1 rung.
            ca.stable_rung[m] = 0;
            ca.witness[m] = ev.moments(0)[m];
            ca.fallback[m] = ca.witness[m] >= params.tau ? 0 : 1;
        }
        std::int32_t stable = ca.stable_rung[m];
        std::int32_t even = stable - stable % 2;
        ca.rung[m] = even;

        double max_p = ladder[even];
        double spacing = 0.25 * max_p;
        double est;
        if (even >= 6) {
            MomentQuartet q{ev.moments(even - 4)[m], ev.moments(even - 2)[m],
                            ev.moments(even - 1)[m], ev.moments(even)[m], spacing};
            est = max_quad(q, params.tau_div);
        } else if (even >= 2) {
            est = max_lin(ev.moments(even - 1)[m], ev.moments(even)[m], spacing,
                          params.tau_div);
        } else if (stable == 1) {
            // Two stable rungs (2^-1 and its midpoint with 2^0).
            est = max_lin(ev.moments(0)[m], ev.moments(1)[m], ladder[1] - ladder[0],
                          params.tau_div);
        } else {
            // Fewer than two stable rungs: plain highest-stable-p* estimate.
            est = pnorm::dyadic_root(ev.moments(0)[m], ladder[0]);
        }
        // The Chebyshev norm of a unit-scaled overlap is at most 1.
        estimates[m] = std::clamp(est, 0.0, 1.0);
    }

    std::size_t exact_calls = 0;
    auto corrected = pnorm::affine_correct(estimates, ca.rung,
                                           pnorm::detail::make_exact_evaluator(sp),
                                           &exact_calls);
    return pnorm::detail::assemble_result(sp, ev.plan(), pnorm::Method::ProjectionAffine,
                                          ladder.values(), std::move(ca), std::move(estimates),
                                          std::move(corrected), ev.fft_count(), exact_calls);
}

}  // namespace maxconv::projection
