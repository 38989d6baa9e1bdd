#include "maxconv/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maxconv/projection.hpp"

namespace maxconv::hmm {

void AdditiveHmmModel::validate() const {
    if (states == 0 || prior.size() != states || delta.size() != 2 * states - 1 ||
        likelihood.size() != obs_bins * states) {
        throw std::invalid_argument("inconsistent model dimensions");
    }
    auto nonneg_with_mass = [](std::span<const double> v) {
        double mx = 0.0;
        for (double x : v) {
            if (!(x >= 0.0)) return false;
            mx = std::max(mx, x);
        }
        return mx > 0.0;
    };
    if (!nonneg_with_mass(prior)) throw std::invalid_argument("prior must have positive mass");
    if (!nonneg_with_mass(delta)) throw std::invalid_argument("delta must have positive mass");
    for (std::size_t d = 0; d < obs_bins; ++d) {
        if (!nonneg_with_mass({likelihood_row(d), states})) {
            throw std::invalid_argument("likelihood row without positive mass");
        }
    }
}

BinnedSeries discretize(std::span<const double> series, std::size_t bins) {
    if (series.empty()) throw std::invalid_argument("series must be nonempty");
    if (bins < 2) throw std::invalid_argument("need at least 2 bins");
    auto [mn_it, mx_it] = std::minmax_element(series.begin(), series.end());
    double lo = *mn_it, hi = *mx_it;
    if (!(hi > lo)) hi = lo + 1.0;  // constant series: single occupied bin

    BinnedSeries out;
    out.bins = bins;
    out.edges.resize(bins + 1);
    double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) out.edges[b] = lo + width * static_cast<double>(b);
    out.edges[bins] = hi;
    out.indices.reserve(series.size());
    for (double x : series) {
        auto idx = static_cast<std::size_t>((x - lo) / width);
        out.indices.push_back(std::min(idx, bins - 1));
    }
    return out;
}

namespace {

void require_in_range(const BinnedSeries& series, const char* name) {
    for (std::size_t idx : series.indices) {
        if (idx >= series.bins) {
            throw std::invalid_argument(std::string(name) + " bin index out of range");
        }
    }
}

}  // namespace

AdditiveHmmModel estimate_empirical_model(const BinnedSeries& latent,
                                          const BinnedSeries& observed, double smoothing) {
    if (latent.indices.size() != observed.indices.size()) {
        throw std::invalid_argument("latent and observed series must have equal length");
    }
    if (latent.indices.size() < 2) {
        throw std::invalid_argument("need at least 2 samples to estimate transitions");
    }
    if (!(smoothing >= 0.0)) throw std::invalid_argument("smoothing must be >= 0");
    require_in_range(latent, "latent");
    require_in_range(observed, "observed");

    const std::size_t k = latent.bins;
    const std::size_t a = observed.bins;
    AdditiveHmmModel model;
    model.states = k;
    model.obs_bins = a;
    model.prior.assign(k, smoothing);
    model.delta.assign(2 * k - 1, smoothing);
    model.likelihood.assign(a * k, smoothing);

    const auto& xs = latent.indices;
    const auto& ds = observed.indices;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        model.prior[xs[i]] += 1.0;
        model.likelihood[ds[i] * k + xs[i]] += 1.0;
        if (i + 1 < xs.size()) {
            auto diff = static_cast<std::ptrdiff_t>(xs[i + 1]) -
                        static_cast<std::ptrdiff_t>(xs[i]);
            model.delta[static_cast<std::size_t>(diff + static_cast<std::ptrdiff_t>(k) - 1)] +=
                1.0;
        }
    }

    auto normalize = [](std::span<double> v) {
        double total = 0.0;
        for (double x : v) total += x;
        if (total > 0.0) {
            for (double& x : v) x /= total;
        }
    };
    normalize(model.prior);
    normalize(model.delta);
    for (std::size_t d = 0; d < a; ++d) {
        normalize({model.likelihood.data() + d * k, k});
    }
    return model;
}

namespace {

// One forward transition step: length-k window (offset k-1) of the
// max-convolution of the current scores with delta.
std::vector<double> transition_exact(std::span<const double> cur,
                                     std::span<const double> delta) {
    const std::size_t k = cur.size();
    std::vector<double> next(k, 0.0);
    for (std::size_t to = 0; to < k; ++to) {
        double best = 0.0;
        for (std::size_t from = 0; from < k; ++from) {
            best = std::max(best, cur[from] * delta[to + k - 1 - from]);
        }
        next[to] = best;
    }
    return next;
}

std::vector<double> transition_approx(std::span<const double> cur,
                                      std::span<const double> delta, Kernel kernel,
                                      double pstar_max, const pnorm::Params& params) {
    const std::size_t k = cur.size();
    Tensor cur_t = Tensor::vector({cur.begin(), cur.end()});
    Tensor delta_t = Tensor::vector({delta.begin(), delta.end()});
    pnorm::MaxConvResult res;
    if (kernel == Kernel::ProjectionAffine) {
        res = projection::projection_max_convolve(cur_t, delta_t,
                                                  pstar_max > 0.0 ? pstar_max : 64.0, params);
    } else {
        double pmax = pstar_max > 0.0
                          ? pstar_max
                          : pnorm::select_pstar_max(cur.size() + delta.size() - 1, params.tau);
        res = pnorm::piecewise_affine_max_convolve(cur_t, delta_t, pmax, params);
    }
    std::vector<double> next(k);
    for (std::size_t to = 0; to < k; ++to) next[to] = res.values[to + k - 1];
    return next;
}

}  // namespace

ViterbiPath viterbi_additive(const AdditiveHmmModel& model, const BinnedSeries& data,
                             Kernel kernel, double pstar_max, const pnorm::Params& params) {
    model.validate();
    if (data.bins != model.obs_bins) {
        throw std::invalid_argument("observation bin count does not match model");
    }
    require_in_range(data, "observation");
    const std::size_t k = model.states;
    const std::size_t n = data.indices.size();
    if (n == 0) throw std::invalid_argument("need at least one observation");

    std::vector<std::vector<double>> from_left(n);
    from_left[0] = model.prior;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        auto& cur = from_left[i];
        const double* lik = model.likelihood_row(data.indices[i]);
        double mx = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            cur[s] *= lik[s];
            mx = std::max(mx, cur[s]);
        }
        if (!(mx > 0.0)) {
            throw std::domain_error("model assigns zero probability to the observations");
        }
        for (double& v : cur) v /= mx;
        from_left[i + 1] = kernel == Kernel::Exact
                               ? transition_exact(cur, model.delta)
                               : transition_approx(cur, model.delta, kernel, pstar_max, params);
    }
    {
        auto& last = from_left[n - 1];
        const double* lik = model.likelihood_row(data.indices[n - 1]);
        double mx = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            last[s] *= lik[s];
            mx = std::max(mx, last[s]);
        }
        if (!(mx > 0.0)) {
            throw std::domain_error("model assigns zero probability to the observations");
        }
        for (double& v : last) v /= mx;
    }

    ViterbiPath path;
    path.states.resize(n);
    // Ascending scans with strict > keep the smallest state on ties.
    std::size_t best = 0;
    for (std::size_t s = 1; s < k; ++s) {
        if (from_left[n - 1][s] > from_left[n - 1][best]) best = s;
    }
    path.states[n - 1] = best;
    for (std::size_t i = n - 1; i-- > 0;) {
        std::size_t to = path.states[i + 1];
        std::size_t arg = 0;
        double best_score = -1.0;
        for (std::size_t s = 0; s < k; ++s) {
            double score = from_left[i][s] * model.delta[to + k - 1 - s];
            if (score > best_score) {
                best_score = score;
                arg = s;
            }
        }
        path.states[i] = arg;
    }
    return path;
}

PathAgreement compare_paths(const ViterbiPath& exact, const ViterbiPath& approx) {
    if (exact.states.size() != approx.states.size()) {
        throw std::invalid_argument("paths must have equal length");
    }
    PathAgreement stats;
    std::size_t agree = 0;
    double sum_abs = 0.0;
    for (std::size_t i = 0; i < exact.states.size(); ++i) {
        auto a = exact.states[i], b = approx.states[i];
        std::size_t diff = a > b ? a - b : b - a;
        if (diff == 0) ++agree;
        stats.max_abs_diff = std::max(stats.max_abs_diff, diff);
        sum_abs += static_cast<double>(diff);
    }
    stats.agreement = static_cast<double>(agree) / static_cast<double>(exact.states.size());
    stats.mean_abs_diff = sum_abs / static_cast<double>(exact.states.size());
    return stats;
}

}  // namespace maxconv::hmm
