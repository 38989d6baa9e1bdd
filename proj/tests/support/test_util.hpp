#pragma once

// Shared helpers for the unit and acceptance suites: independent brute-force
// convolution oracles and the FFT-noise allowance used when checking
// analytic bounds against floating-point pipelines.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "maxconv/oracle.hpp"
#include "maxconv/tensor.hpp"

namespace testutil {

/// Direct summed convolution, the independent oracle for the FFT engine.
inline std::vector<double> direct_convolve(std::span<const double> a,
                                           std::span<const double> b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

inline std::vector<double> direct_convolve_nd(const maxconv::Tensor& a,
                                              const maxconv::Tensor& b) {
    auto out_shape = maxconv::convolution_shape(a.shape(), b.shape());
    std::vector<double> out(maxconv::shape_product(out_shape), 0.0);
    auto out_strides = maxconv::row_major_strides(out_shape);
    std::vector<std::size_t> ia(a.rank(), 0);
    std::size_t fa = 0;
    do {
        std::vector<std::size_t> ib(b.rank(), 0);
        std::size_t fb = 0;
        do {
            std::size_t fo = 0;
            for (std::size_t d = 0; d < ia.size(); ++d) {
                fo += (ia[d] + ib[d]) * out_strides[d];
            }
            out[fo] += a[fa] * b[fb];
            ++fb;
        } while (maxconv::next_index(ib, b.shape()));
        ++fa;
    } while (maxconv::next_index(ia, a.shape()));
    return out;
}

inline std::vector<double> elementwise_pow(std::span<const double> v, double p) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::pow(v[i], p);
    return out;
}

/// Relative FFT-noise allowance for a value selected at rung p with stability
/// witness w = (||u||_p)^p: a perturbation delta on the convolution output
/// shifts the rooted value by about delta / (p w) relative. delta_hat is a
/// generous bound on observed double-precision FFT round-off.
inline double fft_noise_allowance(double pstar, double witness, double delta_hat = 1e-13) {
    if (!(witness > 0.0)) return 1.0;
    return delta_hat / (pstar * witness);
}

}  // namespace testutil
