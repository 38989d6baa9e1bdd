#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace maxconv::rng {

/// Seeded sampler with hand-rolled transforms so that a given seed produces
/// the same stream on every platform (the std distributions are
/// implementation-defined).
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    double uniform01();
    double normal();
    double gamma(double shape);
    double beta(double alpha, double beta);

    std::vector<double> uniform_vector(std::size_t n);
    std::vector<double> beta_vector(std::size_t n, double alpha, double beta);
    /// Uniform vector convolved with a narrow Gaussian kernel, uniform noise
    /// added afterward; values rescaled into [0, 1].
    std::vector<double> smoothed_uniform_vector(std::size_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace maxconv::rng
