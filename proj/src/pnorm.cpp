#include "maxconv/pnorm.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "ladder_eval.hpp"
#include "maxconv/oracle.hpp"

namespace maxconv::pnorm {

namespace {

void require_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("tau must lie in (0, 1)");
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// p = m * 2^k with m in {1, 3}; returns false for any other exponent.
bool decompose_dyadic(double p, int& pow2, bool& times3) {
    if (!(p > 0.0) || !std::isfinite(p)) return false;
    int e = 0;
    double f = std::frexp(p, &e);
    if (f == 0.5) {
        times3 = false;
        pow2 = e - 1;
        return true;
    }
    if (f == 0.75) {
        times3 = true;
        pow2 = e - 2;
        return true;
    }
    return false;
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::Fixed: return "fixed-pstar";
        case Method::Piecewise: return "piecewise";
        case Method::PiecewiseAffine: return "piecewise-affine";
        case Method::ProjectionAffine: return "projection-affine";
    }
    return "unknown";
}

double dyadic_pow(double x, double p) {
    int k = 0;
    bool t3 = false;
    if (!(x > 0.0) || !decompose_dyadic(p, k, t3)) {
        return std::pow(x, p);
    }
    double r = t3 ? x * x * x : x;
    for (; k > 0; --k) r *= r;
    for (; k < 0; ++k) r = std::sqrt(r);
    return r;
}

double dyadic_root(double x, double p) {
    int k = 0;
    bool t3 = false;
    if (!(x > 0.0) || !decompose_dyadic(p, k, t3)) {
        return std::pow(x, 1.0 / p);
    }
    double r = t3 ? std::cbrt(x) : x;
    for (; k > 0; --k) r = std::sqrt(r);
    for (; k < 0; ++k) r *= r;
    return r;
}

PStarLadder PStarLadder::powers_of_two(double pstar_max) {
    if (!std::isfinite(pstar_max) || pstar_max < 1.0) {
        throw std::invalid_argument("pstar_max must be >= 1");
    }
    int top = static_cast<int>(std::ceil(std::log2(pstar_max)));
    std::vector<double> values;
    values.reserve(top + 1);
    for (int i = 0; i <= top; ++i) values.push_back(std::ldexp(1.0, i));
    return PStarLadder(std::move(values), false);
}

PStarLadder PStarLadder::interleaved(double pstar_max) {
    if (!std::isfinite(pstar_max) || pstar_max < 1.0) {
        throw std::invalid_argument("pstar_max must be >= 1");
    }
    int top = static_cast<int>(std::ceil(std::log2(pstar_max)));
    std::vector<double> values;
    values.reserve(2 * (top + 2) - 1);
    for (int i = -1; i <= top; ++i) {
        double p = std::ldexp(1.0, i);
        values.push_back(p);
        if (i < top) values.push_back(0.5 * (p + std::ldexp(1.0, i + 1)));
    }
    return PStarLadder(std::move(values), true);
}

PStarLadder PStarLadder::single(double pstar) {
    if (!std::isfinite(pstar) || pstar < 0.5) {
        throw std::invalid_argument("pstar must be >= 0.5");
    }
    return PStarLadder({pstar}, false);
}

double select_pstar_max(std::size_t k, double tau) {
    if (k < 2) throw std::invalid_argument("result length must be >= 2");
    require_tau(tau);
    return std::log(static_cast<double>(k)) / std::log1p(std::pow(tau, 0.25));
}

double pstar_mode_piecewise(std::size_t k, double tau) {
    if (k < 2) throw std::invalid_argument("result length must be >= 2");
    require_tau(tau);
    double lk = std::log2(static_cast<double>(k));
    double lt = std::log2(tau);
    double inner = -(2.0 * lk - lt) / lt;
    if (!(inner > 0.0)) throw std::domain_error("pstar_mode_piecewise out of domain");
    return lk / std::log2(inner);
}

double error_bound_fixed(std::size_t k_m, double pstar) {
    if (k_m < 1) throw std::invalid_argument("overlap length must be >= 1");
    if (!(pstar >= 1.0)) throw std::invalid_argument("pstar must be >= 1");
    return std::pow(static_cast<double>(k_m), 1.0 / pstar) - 1.0;
}

double error_bound_middle_contour(std::size_t k_m, double pstar, double tau) {
    if (k_m < 1) throw std::invalid_argument("overlap length must be >= 1");
    if (!(pstar >= 1.0)) throw std::invalid_argument("pstar must be >= 1");
    require_tau(tau);
    return std::pow(tau, 1.0 / (2.0 * pstar)) *
           (1.0 - std::pow(static_cast<double>(k_m), -1.0 / pstar));
}

std::vector<double> max_convolve_given_pstar(const Tensor& L_scaled, const Tensor& R_scaled,
                                             double pstar) {
    require_nonnegative(L_scaled, "L");
    require_nonnegative(R_scaled, "R");
    if (!(pstar >= 0.5)) throw std::invalid_argument("pstar must be >= 0.5");
    if (std::abs(L_scaled.max_value() - 1.0) > 1e-12 ||
        std::abs(R_scaled.max_value() - 1.0) > 1e-12) {
        throw std::invalid_argument("inputs must be scaled to maximum element 1");
    }
    auto vl = detail::powered(L_scaled.values(), pstar);
    auto vr = detail::powered(R_scaled.values(), pstar);
    for (const auto& v : {std::cref(vl), std::cref(vr)}) {
        for (double x : v.get()) {
            if (!std::isfinite(x)) throw std::runtime_error("exponentiation overflow");
        }
    }
    fft::ConvolutionPlan plan(L_scaled.shape(), R_scaled.shape());
    auto conv = plan.convolve(vl, vr);
    for (double& v : conv) v = v < 0.0 ? 0.0 : dyadic_root(v, pstar);
    return conv;
}

std::vector<double> affine_correct(std::span<const double> approx,
                                   std::span<const std::int32_t> rung,
                                   const std::function<double(std::size_t)>& exact_at,
                                   std::size_t* exact_calls) {
    if (approx.size() != rung.size()) {
        throw std::invalid_argument("approx/rung size mismatch");
    }
    std::int32_t top = 0;
    for (auto r : rung) top = std::max(top, r);

    struct Extremes {
        bool any = false;
        std::size_t m_min = 0, m_max = 0;
        double x_min = 0.0, x_max = 0.0;
    };
    std::vector<Extremes> ext(top + 1);
    for (std::size_t m = 0; m < approx.size(); ++m) {
        Extremes& e = ext[rung[m]];
        if (!e.any) {
            e = {true, m, m, approx[m], approx[m]};
        } else {
            // Strict comparisons keep the lowest index on ties.
            if (approx[m] < e.x_min) { e.m_min = m; e.x_min = approx[m]; }
            if (approx[m] > e.x_max) { e.m_max = m; e.x_max = approx[m]; }
        }
    }

    std::size_t calls = 0;
    std::vector<double> slope(top + 1, 1.0), bias(top + 1, 0.0);
    for (std::int32_t r = 0; r <= top; ++r) {
        const Extremes& e = ext[r];
        if (!e.any) continue;
        double y_min = exact_at(e.m_min);
        ++calls;
        double y_max = y_min;
        if (e.m_max != e.m_min) {
            y_max = exact_at(e.m_max);
            ++calls;
        }
        if (e.x_max > e.x_min) {
            slope[r] = (y_max - y_min) / (e.x_max - e.x_min);
            bias[r] = y_min - slope[r] * e.x_min;
        } else if (e.x_max > 0.0) {
            slope[r] = y_max / e.x_max;
            bias[r] = 0.0;
        }
        // x_max == 0: fully underflowed contour, identity correction.
    }
    if (exact_calls) *exact_calls += calls;

    std::vector<double> out(approx.size());
    for (std::size_t m = 0; m < approx.size(); ++m) {
        out[m] = approx[m] * slope[rung[m]] + bias[rung[m]];
    }
    return out;
}

namespace detail {

ScaledProblem scale_inputs(const Tensor& L, const Tensor& R) {
    require_nonnegative(L, "L");
    require_nonnegative(R, "R");
    if (L.rank() != R.rank()) {
        throw std::invalid_argument("operands must have equal rank");
    }
    double ml = L.max_value();
    double mr = R.max_value();
    if (!(ml > 0.0) || !(mr > 0.0)) {
        throw std::invalid_argument("operands must have a positive element");
    }
    std::vector<double> lv = L.values();
    std::vector<double> rv = R.values();
    for (double& v : lv) v /= ml;
    for (double& v : rv) v /= mr;
    return {Tensor(L.shape(), std::move(lv)), Tensor(R.shape(), std::move(rv)), ml, mr};
}

std::vector<double> powered(std::span<const double> values, double pstar) {
    std::vector<double> out(values.size());
    int k = 0;
    bool t3 = false;
    if (!decompose_dyadic(pstar, k, t3)) {
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::pow(values[i], pstar);
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        double x = values[i];
        if (!(x > 0.0)) {
            out[i] = 0.0;
            continue;
        }
        double r = t3 ? x * x * x : x;
        for (int j = k; j > 0; --j) r *= r;
        for (int j = k; j < 0; ++j) r = std::sqrt(r);
        out[i] = r;
    }
    return out;
}

LadderEvaluation::LadderEvaluation(const ScaledProblem& sp, std::span<const double> ladder,
                                   bool retain)
    : problem_(sp),
      ladder_(ladder.begin(), ladder.end()),
      plan_(sp.L.shape(), sp.R.shape()),
      workspace_(plan_.make_workspace()),
      retain_(retain),
      store_(retain ? ladder.size() : 0) {}

void LadderEvaluation::compute_powered(std::size_t i) {
    double p = ladder_[i];
    int e = 0;
    double f = std::frexp(p, &e);
    auto square = [](std::vector<double>& v) {
        for (double& x : v) x *= x;
    };
    if (f == 0.5) {  // p == 2^(e-1)
        int target = e - 1;
        if (chain_valid_ && chain_exp_ == target) {
            // current chain already holds this power
        } else if (target == 0) {
            chain_a_ = problem_.L.values();
            chain_b_ = problem_.R.values();
        } else if (chain_valid_ && target == chain_exp_ + 1 && chain_exp_ >= 0) {
            square(chain_a_);
            square(chain_b_);
        } else {
            chain_a_ = powered(problem_.L.values(), p);
            chain_b_ = powered(problem_.R.values(), p);
        }
        chain_exp_ = target;
        chain_valid_ = true;
        cur_a_ = &chain_a_;
        cur_b_ = &chain_b_;
        return;
    }
    // f == 0.75: midpoint p = 1.5 * 2^(e-1), from the chain at 2^(e-1).
    int need = e - 1;
    if (!(chain_valid_ && chain_exp_ == need)) {
        double zp = std::ldexp(1.0, need);
        if (need == 0) {
            chain_a_ = problem_.L.values();
            chain_b_ = problem_.R.values();
        } else {
            chain_a_ = powered(problem_.L.values(), zp);
            chain_b_ = powered(problem_.R.values(), zp);
        }
        chain_exp_ = need;
        chain_valid_ = true;
    }
    auto fill_mid = [](const std::vector<double>& z, std::vector<double>& mid) {
        mid.resize(z.size());
        for (std::size_t q = 0; q < z.size(); ++q) mid[q] = z[q] * std::sqrt(z[q]);
    };
    fill_mid(chain_a_, mid_a_);
    fill_mid(chain_b_, mid_b_);
    cur_a_ = &mid_a_;
    cur_b_ = &mid_b_;
}

void LadderEvaluation::convolve_rung(std::vector<double>& out) {
    out.resize(plan_.result_size());
    plan_.convolve_into(workspace_, *cur_a_, *cur_b_, out);
    for (double& v : out) v = std::max(v, 0.0);
    ++fft_count_;
}

void LadderEvaluation::for_each_rung(
    const std::function<void(std::size_t, std::span<const double>)>& visit) {
    for (std::size_t i = 0; i < ladder_.size(); ++i) {
        if (retain_) {
            visit(i, moments(i));
        } else {
            compute_powered(i);
            convolve_rung(streaming_buffer_);
            visit(i, streaming_buffer_);
        }
    }
}

const std::vector<double>& LadderEvaluation::moments(std::size_t i) {
    if (!retain_) throw std::logic_error("moments() requires a retaining evaluation");
    if (store_[i].empty()) {
        compute_powered(i);
        convolve_rung(store_[i]);
    }
    return store_[i];
}

std::function<double(std::size_t)> make_exact_evaluator(const ScaledProblem& sp) {
    if (sp.L.rank() == 1) {
        return [&sp](std::size_t m) { return oracle::max_convolution_at_index(sp.L, sp.R, m); };
    }
    auto out_shape = convolution_shape(sp.L.shape(), sp.R.shape());
    auto strides = row_major_strides(out_shape);
    return [&sp, strides](std::size_t m) {
        std::vector<std::size_t> cell(strides.size());
        for (std::size_t d = 0; d < strides.size(); ++d) {
            cell[d] = m / strides[d];
            m %= strides[d];
        }
        return oracle::max_convolution_at_cell(sp.L, sp.R, cell);
    };
}

MaxConvResult assemble_result(const ScaledProblem& sp, const fft::ConvolutionPlan& plan,
                              Method method, std::span<const double> ladder,
                              ContourAssignment contour, std::vector<double> scaled_estimates,
                              std::vector<double> corrected, std::size_t fft_count,
                              std::size_t exact_evaluations) {
    MaxConvResult res;
    double scale = sp.scale_l * sp.scale_r;
    std::vector<double> final_vals = corrected.empty() ? scaled_estimates : std::move(corrected);
    for (double& v : final_vals) v *= scale;
    res.values = Tensor(plan.result_shape(), std::move(final_vals));
    res.contour = std::move(contour);
    res.method = method;
    res.ladder.assign(ladder.begin(), ladder.end());
    res.scale_l = sp.scale_l;
    res.scale_r = sp.scale_r;
    res.pre_correction = std::move(scaled_estimates);
    res.fft_count = fft_count;
    res.exact_evaluations = exact_evaluations;
    return res;
}

}  // namespace detail

namespace {

MaxConvResult run_power_ladder(const Tensor& L, const Tensor& R, Method method,
                               const PStarLadder& ladder, const Params& params) {
    require_tau(params.tau);
    auto sp = detail::scale_inputs(L, R);
    detail::LadderEvaluation ev(sp, ladder.values(), /*retain=*/false);

    const std::size_t n = ev.result_size();
    ContourAssignment ca;
    ca.rung.assign(n, 0);
    ca.stable_rung.resize(n);
    ca.witness.assign(n, 0.0);
    ca.fallback.assign(n, 1);
    // One streaming ascending pass; the last stable rung seen per index is
    // the maximal one. Unstable-everywhere indices keep the rung-0 value as
    // witness and stay flagged.
    ev.for_each_rung([&](std::size_t i, std::span<const double> vm) {
        for (std::size_t m = 0; m < n; ++m) {
            if (vm[m] >= params.tau) {
                ca.rung[m] = static_cast<std::int32_t>(i);
                ca.witness[m] = vm[m];
                ca.fallback[m] = 0;
            } else if (i == 0) {
                ca.witness[m] = vm[m];
            }
        }
    });
    std::vector<double> selected(n);
    for (std::size_t m = 0; m < n; ++m) {
        ca.stable_rung[m] = ca.rung[m];
        selected[m] = dyadic_root(ca.witness[m], ladder[ca.rung[m]]);
    }

    std::vector<double> corrected;
    std::size_t exact_calls = 0;
    if (method == Method::PiecewiseAffine) {
        corrected = affine_correct(selected, ca.rung, detail::make_exact_evaluator(sp),
                                   &exact_calls);
    }
    return detail::assemble_result(sp, ev.plan(), method, ladder.values(), std::move(ca),
                                   std::move(selected), std::move(corrected), ev.fft_count(),
                                   exact_calls);
}

}  // namespace

MaxConvResult fixed_pstar_max_convolve(const Tensor& L, const Tensor& R, double pstar,
                                       const Params& params) {
    return run_power_ladder(L, R, Method::Fixed, PStarLadder::single(pstar), params);
}

MaxConvResult piecewise_max_convolve(const Tensor& L, const Tensor& R, double pstar_max,
                                     const Params& params) {
    return run_power_ladder(L, R, Method::Piecewise, PStarLadder::powers_of_two(pstar_max),
                            params);
}

MaxConvResult piecewise_affine_max_convolve(const Tensor& L, const Tensor& R, double pstar_max,
                                            const Params& params) {
    return run_power_ladder(L, R, Method::PiecewiseAffine, PStarLadder::powers_of_two(pstar_max),
                            params);
}

MaxConvResult max_convolve_nd(const Tensor& L, const Tensor& R, Method method, double pstar_max,
                              const Params& params) {
    switch (method) {
        case Method::Fixed: return fixed_pstar_max_convolve(L, R, pstar_max, params);
        case Method::Piecewise: return piecewise_max_convolve(L, R, pstar_max, params);
        case Method::PiecewiseAffine:
            return piecewise_affine_max_convolve(L, R, pstar_max, params);
        case Method::ProjectionAffine: break;
    }
    throw std::invalid_argument("projection method dispatches via projection_max_convolve");
}

DeconvolveResult max_deconvolve(const Tensor& M, const Tensor& L, double pstar,
                                const Params& params) {
    require_nonnegative(M, "M");
    require_nonnegative(L, "L");
    if (!(pstar >= 0.5)) throw std::invalid_argument("pstar must be >= 0.5");
    if (M.rank() != L.rank()) throw std::invalid_argument("operands must have equal rank");
    std::vector<std::size_t> out_shape(M.rank());
    for (std::size_t d = 0; d < M.rank(); ++d) {
        if (M.extent(d) < L.extent(d)) {
            throw std::invalid_argument("M must be at least as large as L on every axis");
        }
        out_shape[d] = M.extent(d) - L.extent(d) + 1;
    }

    // Cyclic transforms of the p*-th powers on a common padded grid; linear
    // deconvolution holds because the true quotient has bounded support.
    std::vector<std::size_t> padded(M.rank());
    for (std::size_t d = 0; d < M.rank(); ++d) padded[d] = next_pow2(M.extent(d));
    auto strides = row_major_strides(padded);
    std::size_t padded_total = shape_product(padded);
    std::size_t complex_total = padded_total / padded.back() * (padded.back() / 2 + 1);

    auto scatter = [&](const Tensor& t, double* dst) {
        std::fill(dst, dst + padded_total, 0.0);
        std::vector<std::size_t> idx(t.rank(), 0);
        std::size_t flat = 0;
        do {
            std::size_t target = 0;
            for (std::size_t d = 0; d < idx.size(); ++d) target += idx[d] * strides[d];
            dst[target] = dyadic_pow(t[flat++], pstar);
        } while (next_index(idx, t.shape()));
    };

    static std::mutex planner;
    std::vector<int> dims(padded.begin(), padded.end());
    std::vector<double> real(padded_total);
    std::vector<fftw_complex> cm(complex_total), cl(complex_total);
    fftw_plan fwd, inv;
    {
        std::lock_guard<std::mutex> lock(planner);
        fwd = fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), real.data(),
                                cm.data(), FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(), cm.data(),
                                real.data(), FFTW_ESTIMATE);
    }
    scatter(M, real.data());
    fftw_execute_dft_r2c(fwd, real.data(), cm.data());
    scatter(L, real.data());
    fftw_execute_dft_r2c(fwd, real.data(), cl.data());

    bool unstable = false;
    const double scale = 1.0 / static_cast<double>(padded_total);
    for (std::size_t i = 0; i < complex_total; ++i) {
        double mag2 = cl[i][0] * cl[i][0] + cl[i][1] * cl[i][1];
        if (std::sqrt(mag2) < params.tau_div) {
            unstable = true;
            cm[i][0] = 0.0;
            cm[i][1] = 0.0;
            continue;
        }
        double re = (cm[i][0] * cl[i][0] + cm[i][1] * cl[i][1]) / mag2;
        double im = (cm[i][1] * cl[i][0] - cm[i][0] * cl[i][1]) / mag2;
        cm[i][0] = re * scale;
        cm[i][1] = im * scale;
    }
    fftw_execute_dft_c2r(inv, cm.data(), real.data());
    {
        std::lock_guard<std::mutex> lock(planner);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }

    std::vector<double> out(shape_product(out_shape));
    std::vector<std::size_t> idx(out_shape.size(), 0);
    std::size_t flat = 0;
    do {
        std::size_t src = 0;
        for (std::size_t d = 0; d < idx.size(); ++d) src += idx[d] * strides[d];
        double v = real[src];
        out[flat++] = v <= 0.0 ? 0.0 : dyadic_root(v, pstar);
    } while (next_index(idx, out_shape));
    return {Tensor(std::move(out_shape), std::move(out)), unstable};
}

}  // namespace maxconv::pnorm
