#include "maxconv/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maxconv::rng {

double Sampler::uniform01() {
    // 53-bit mantissa draw in [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Sampler::normal() {
    // Box-Muller; the second variate is discarded to keep the state simple.
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

double Sampler::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
    // Marsaglia-Tsang squeeze; boost for shape < 1.
    if (shape < 1.0) {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Sampler::beta(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw std::invalid_argument("beta parameters must be positive");
    }
    double x = gamma(alpha);
    double y = gamma(beta);
    return x / (x + y);
}

std::vector<double> Sampler::uniform_vector(std::size_t n) {
    std::vector<double> out(n);
    for (double& v : out) v = uniform01();
    return out;
}

std::vector<double> Sampler::beta_vector(std::size_t n, double alpha, double b) {
    std::vector<double> out(n);
    for (double& v : out) v = beta(alpha, b);
    return out;
}

std::vector<double> Sampler::smoothed_uniform_vector(std::size_t n) {
    std::vector<double> base = uniform_vector(n);
    // Narrow Gaussian kernel, sigma ~ n/64 capped to keep structure local.
    double sigma = std::max(1.0, static_cast<double>(n) / 64.0);
    auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (static_cast<double>(i) / sigma) *
                            (static_cast<double>(i) / sigma));
        kernel[i + radius] = w;
        total += w;
    }
    for (double& w : kernel) w /= total;

    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
            auto src = static_cast<std::ptrdiff_t>(i) + j;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
            acc += base[src] * kernel[j + radius];
        }
        out[i] = acc + 0.1 * uniform01();
    }
    double mx = *std::max_element(out.begin(), out.end());
    double mn = *std::min_element(out.begin(), out.end());
    double span = mx > mn ? mx - mn : 1.0;
    for (double& v : out) v = (v - mn) / span;
    return out;
}

}  // namespace maxconv::rng
