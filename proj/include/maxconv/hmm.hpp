#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "maxconv/pnorm.hpp"

namespace maxconv::hmm {

/// HMM with a Toeplitz transition matrix, represented by its additive
/// transition kernel delta over state differences: the transition matrix is
/// T[a][b] = delta[a - b + k - 1].
struct AdditiveHmmModel {
    std::vector<double> prior;       ///< length k
    std::vector<double> likelihood;  ///< obs_bins x k, row-major; row d is Pr(D=d | X)
    std::vector<double> delta;       ///< length 2k-1; offset k-1 is zero displacement
    std::size_t states = 0;          ///< k
    std::size_t obs_bins = 0;        ///< a

    const double* likelihood_row(std::size_t obs_bin) const {
        return likelihood.data() + obs_bin * states;
    }
    void validate() const;
};

/// Equal-width binning of a real series over [min, max].
struct BinnedSeries {
    std::size_t bins = 0;
    std::vector<double> edges;         ///< ascending, length bins + 1
    std::vector<std::size_t> indices;  ///< one bin index per sample

    double center(std::size_t bin) const { return 0.5 * (edges[bin] + edges[bin + 1]); }
};

struct ViterbiPath {
    std::vector<std::size_t> states;
};

struct PathAgreement {
    double agreement = 0.0;      ///< fraction of equal indices
    std::size_t max_abs_diff = 0;
    double mean_abs_diff = 0.0;
};

/// Max-convolution strategy used for the forward-pass transition step.
enum class Kernel { Exact, PiecewiseAffine, ProjectionAffine };

/// Equal-width discretization; the series maximum lands in the top bin, and a
/// constant series occupies bin 0 alone.
BinnedSeries discretize(std::span<const double> series, std::size_t bins);

/// Empirical model from paired binned series: prior and transition kernel are
/// histograms of the latent series (values and successive differences), the
/// likelihood rows are co-occurrence counts per observation bin. Additive
/// smoothing is applied to every count before normalization.
AdditiveHmmModel estimate_empirical_model(const BinnedSeries& latent,
                                          const BinnedSeries& observed,
                                          double smoothing = 1.0);

/// Viterbi decoding with an additive transition kernel. The forward pass
/// renormalizes to maximum 1 after every likelihood product (argmax
/// invariant, prevents underflow across long chains); the transition step is
/// one max-convolution with delta, truncated to the length-k window at offset
/// k-1 where both states are valid. pstar_max applies to the approximate
/// kernels (0 = per-kernel default). Ties break toward the smaller state.
ViterbiPath viterbi_additive(const AdditiveHmmModel& model,
                             const BinnedSeries& data, Kernel kernel,
                             double pstar_max = 0.0,
                             const pnorm::Params& params = {});

PathAgreement compare_paths(const ViterbiPath& exact, const ViterbiPath& approx);

}  // namespace maxconv::hmm
