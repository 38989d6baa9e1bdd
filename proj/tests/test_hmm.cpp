#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "maxconv/hmm.hpp"
#include "maxconv/random.hpp"

using namespace maxconv::hmm;
using Catch::Approx;

namespace {

// Independent O(n k^2) Viterbi over an explicit transition matrix, with the
// same per-step renormalization and smallest-state tie break.
std::vector<std::size_t> generic_viterbi(const AdditiveHmmModel& model,
                                         const std::vector<std::size_t>& data,
                                         const std::vector<double>& transition) {
    const std::size_t k = model.states;
    const std::size_t n = data.size();
    std::vector<std::vector<double>> score(n);
    score[0] = model.prior;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        auto& cur = score[i];
        const double* lik = model.likelihood_row(data[i]);
        double mx = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            cur[s] *= lik[s];
            mx = std::max(mx, cur[s]);
        }
        for (double& v : cur) v /= mx;
        score[i + 1].assign(k, 0.0);
        for (std::size_t to = 0; to < k; ++to) {
            double best = 0.0;
            for (std::size_t from = 0; from < k; ++from) {
                best = std::max(best, cur[from] * transition[to * k + from]);
            }
            score[i + 1][to] = best;
        }
    }
    {
        const double* lik = model.likelihood_row(data[n - 1]);
        double mx = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            score[n - 1][s] *= lik[s];
            mx = std::max(mx, score[n - 1][s]);
        }
        for (double& v : score[n - 1]) v /= mx;
    }
    std::vector<std::size_t> path(n);
    std::size_t best = 0;
    for (std::size_t s = 1; s < k; ++s) {
        if (score[n - 1][s] > score[n - 1][best]) best = s;
    }
    path[n - 1] = best;
    for (std::size_t i = n - 1; i-- > 0;) {
        std::size_t arg = 0;
        double best_score = -1.0;
        for (std::size_t s = 0; s < k; ++s) {
            double v = score[i][s] * transition[path[i + 1] * k + s];
            if (v > best_score) {
                best_score = v;
                arg = s;
            }
        }
        path[i] = arg;
    }
    return path;
}

std::vector<double> toeplitz_from_delta(const std::vector<double>& delta, std::size_t k) {
    std::vector<double> T(k * k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) T[a * k + b] = delta[a + k - 1 - b];
    }
    return T;
}

AdditiveHmmModel random_model(maxconv::rng::Sampler& rng, std::size_t k, std::size_t a) {
    AdditiveHmmModel m;
    m.states = k;
    m.obs_bins = a;
    m.prior = rng.uniform_vector(k);
    m.delta = rng.uniform_vector(2 * k - 1);
    m.likelihood = rng.uniform_vector(a * k);
    return m;
}

BinnedSeries series_of(std::vector<std::size_t> idx, std::size_t bins) {
    BinnedSeries s;
    s.bins = bins;
    s.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) s.edges[b] = static_cast<double>(b);
    s.indices = std::move(idx);
    return s;
}

}  // namespace

TEST_CASE("discretize", "[hmm]") {
    auto b = discretize(std::vector<double>{0, 1, 2, 3}, 2);
    REQUIRE(b.indices == std::vector<std::size_t>{0, 0, 1, 1});
    CHECK(b.edges.front() == 0.0);
    CHECK(b.edges.back() == 3.0);

    auto c = discretize(std::vector<double>{5, 5, 5}, 4);
    REQUIRE(c.indices == std::vector<std::size_t>{0, 0, 0});

    maxconv::rng::Sampler rng(3);
    auto series = rng.uniform_vector(500);
    auto d = discretize(series, 64);
    double half_width = 0.5 * (d.edges[1] - d.edges[0]);
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(std::abs(d.center(d.indices[i]) - series[i]) <= half_width + 1e-12);
    }
    CHECK_THROWS_AS(discretize(std::vector<double>{}, 4), std::invalid_argument);
    CHECK_THROWS_AS(discretize(series, 1), std::invalid_argument);
}

TEST_CASE("empirical model estimation", "[hmm]") {
    auto latent = series_of({0, 1, 0, 1}, 2);
    auto observed = series_of({0, 1, 1, 0}, 2);
    auto model = estimate_empirical_model(latent, observed, 0.0);
    REQUIRE(model.states == 2);
    // Differences +1, -1, +1 at offsets {-1, 0, +1}.
    CHECK(model.delta[0] == Approx(1.0 / 3.0));
    CHECK(model.delta[1] == 0.0);
    CHECK(model.delta[2] == Approx(2.0 / 3.0));
    CHECK(model.prior[0] == Approx(0.5));

    auto constant = series_of({3, 3, 3}, 4);
    auto single = estimate_empirical_model(constant, series_of({0, 1, 0}, 2), 0.0);
    CHECK(single.prior[3] == 1.0);
    CHECK(single.prior[0] == 0.0);

    // Uniform pairs: likelihood rows approach uniform within 3 sigma.
    maxconv::rng::Sampler rng(17);
    std::size_t n = 40000, k = 8, a = 4;
    std::vector<std::size_t> xs(n), ds(n);
    for (auto& x : xs) x = static_cast<std::size_t>(rng.uniform01() * k) % k;
    for (auto& d : ds) d = static_cast<std::size_t>(rng.uniform01() * a) % a;
    auto big = estimate_empirical_model(series_of(xs, k), series_of(ds, a), 0.0);
    for (std::size_t d = 0; d < a; ++d) {
        double row_n = 0.0;
        for (std::size_t di : ds) row_n += di == d ? 1.0 : 0.0;
        double sigma = std::sqrt((1.0 / k) * (1.0 - 1.0 / k) / row_n);
        for (std::size_t s = 0; s < k; ++s) {
            CHECK(std::abs(big.likelihood_row(d)[s] - 1.0 / k) <= 3.0 * sigma);
        }
    }

    CHECK_THROWS_AS(estimate_empirical_model(latent, series_of({0, 1}, 2), 1.0),
                    std::invalid_argument);
    // Bin indices outside [0, bins) are rejected rather than read out of range.
    CHECK_THROWS_AS(estimate_empirical_model(series_of({0, 5, 0, 1}, 2), observed, 1.0),
                    std::invalid_argument);
}

TEST_CASE("viterbi degenerate cases", "[hmm]") {
    // Single state: the path has no freedom.
    AdditiveHmmModel one;
    one.states = 1;
    one.obs_bins = 2;
    one.prior = {1.0};
    one.delta = {1.0};
    one.likelihood = {0.4, 0.6};
    auto path = viterbi_additive(one, series_of({0, 1, 1, 0}, 2), Kernel::Exact);
    REQUIRE(path.states == std::vector<std::size_t>{0, 0, 0, 0});

    // Identity kernel and flat likelihood: stuck at the prior argmax.
    std::size_t k = 5;
    AdditiveHmmModel stay;
    stay.states = k;
    stay.obs_bins = 2;
    stay.prior = {0.1, 0.2, 0.9, 0.3, 0.1};
    stay.delta.assign(2 * k - 1, 0.0);
    stay.delta[k - 1] = 1.0;
    stay.likelihood.assign(2 * k, 1.0);
    auto held = viterbi_additive(stay, series_of({0, 1, 0, 1, 1, 0}, 2), Kernel::Exact);
    for (auto s : held.states) REQUIRE(s == 2);

    AdditiveHmmModel bad = stay;
    bad.prior.assign(k, 0.0);
    CHECK_THROWS_AS(viterbi_additive(bad, series_of({0}, 2), Kernel::Exact),
                    std::invalid_argument);
    CHECK_THROWS_AS(viterbi_additive(stay, series_of({0}, 3), Kernel::Exact),
                    std::invalid_argument);
    CHECK_THROWS_AS(viterbi_additive(stay, series_of({0, 9}, 2), Kernel::Exact),
                    std::invalid_argument);
}

TEST_CASE("additive viterbi equals generic-matrix viterbi", "[hmm][property]") {
    maxconv::rng::Sampler rng(59);
    for (int rep = 0; rep < 20; ++rep) {
        std::size_t k = 2 + static_cast<std::size_t>(rng.uniform01() * 31);
        std::size_t a = 2 + static_cast<std::size_t>(rng.uniform01() * 6);
        std::size_t n = 2 + static_cast<std::size_t>(rng.uniform01() * 48);
        auto model = random_model(rng, k, a);
        std::vector<std::size_t> data(n);
        for (auto& d : data) d = static_cast<std::size_t>(rng.uniform01() * a) % a;

        auto fast = viterbi_additive(model, series_of(data, a), Kernel::Exact);
        auto slow = generic_viterbi(model, data, toeplitz_from_delta(model.delta, k));
        REQUIRE(fast.states == slow);
    }
}

TEST_CASE("exact path dominates random paths", "[hmm][property]") {
    maxconv::rng::Sampler rng(61);
    std::size_t k = 16, a = 6, n = 30;
    auto model = random_model(rng, k, a);
    std::vector<std::size_t> data(n);
    for (auto& d : data) d = static_cast<std::size_t>(rng.uniform01() * a) % a;
    auto best = viterbi_additive(model, series_of(data, a), Kernel::Exact);

    auto log_score = [&](const std::vector<std::size_t>& path) {
        double s = std::log(model.prior[path[0]]);
        for (std::size_t i = 0; i < n; ++i) s += std::log(model.likelihood_row(data[i])[path[i]]);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            s += std::log(model.delta[path[i + 1] + k - 1 - path[i]]);
        }
        return s;
    };
    double best_score = log_score(best.states);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<std::size_t> random_path(n);
        for (auto& s : random_path) s = static_cast<std::size_t>(rng.uniform01() * k) % k;
        REQUIRE(log_score(random_path) <= best_score + 1e-9);
    }
}

TEST_CASE("approximate kernels preserve path validity and closeness", "[hmm]") {
    maxconv::rng::Sampler rng(67);
    std::size_t k = 48, a = 8, n = 25;
    auto model = random_model(rng, k, a);
    std::vector<std::size_t> data(n);
    for (auto& d : data) d = static_cast<std::size_t>(rng.uniform01() * a) % a;
    auto series = series_of(data, a);

    auto exact = viterbi_additive(model, series, Kernel::Exact);
    for (auto kernel : {Kernel::PiecewiseAffine, Kernel::ProjectionAffine}) {
        auto approx = viterbi_additive(model, series, kernel);
        REQUIRE(approx.states.size() == n);
        for (auto s : approx.states) REQUIRE(s < k);
        auto stats = compare_paths(exact, approx);
        CHECK(stats.agreement >= 0.9);
    }
}

TEST_CASE("path agreement statistics", "[hmm]") {
    ViterbiPath a{{1, 2, 3, 4}};
    CHECK(compare_paths(a, a).agreement == 1.0);
    CHECK(compare_paths(a, a).max_abs_diff == 0);

    ViterbiPath b{std::vector<std::size_t>(100, 5)};
    ViterbiPath c = b;
    c.states[42] = 9;
    auto stats = compare_paths(b, c);
    CHECK(stats.agreement == Approx(0.99));
    CHECK(stats.max_abs_diff == 4);
    CHECK(stats.mean_abs_diff == Approx(0.04));

    CHECK_THROWS_AS(compare_paths(a, b), std::invalid_argument);
}
