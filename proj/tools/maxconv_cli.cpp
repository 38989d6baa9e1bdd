// Command-line front end: max-convolution runs, oracle comparisons, runtime
// benchmarks, additive-transition Viterbi decoding and seeded sample
// generation, emitting CSV or JSON for plotting.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 size-guard refusal.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "maxconv/hmm.hpp"
#include "maxconv/io.hpp"
#include "maxconv/oracle.hpp"
#include "maxconv/pnorm.hpp"
#include "maxconv/projection.hpp"
#include "maxconv/random.hpp"
#include "maxconv/tensor.hpp"

namespace {

using maxconv::Tensor;
using json = nlohmann::json;

constexpr std::size_t kOracleSizeGuard = std::size_t{1} << 20;

struct SizeGuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
    } else {
        maxconv::io::write_lines(out_path, content);
    }
}

std::string shape_line(const std::vector<std::size_t>& shape) {
    std::string line;
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (d) line += ' ';
        line += std::to_string(shape[d]);
    }
    return line + "\n";
}

struct MethodConfig {
    std::string method = "piecewise-affine";
    double pstar = 8.0;
    std::string pstar_max = "auto";
    double tau = 1e-12;
    double tau_div = 1e-10;

    maxconv::pnorm::Params params() const { return {tau, tau_div}; }

    double resolve_pstar_max(std::size_t result_size) const {
        if (pstar_max == "auto") {
            if (method == "projection-affine") return 64.0;
            return maxconv::pnorm::select_pstar_max(std::max<std::size_t>(result_size, 2), tau);
        }
        double v = std::stod(pstar_max);
        if (!(v >= 1.0)) throw std::runtime_error("--pstar-max must be >= 1 or 'auto'");
        return v;
    }
};

void add_method_options(CLI::App* cmd, MethodConfig& cfg, bool with_naive) {
    std::vector<std::string> methods{"fixed-pstar", "piecewise", "piecewise-affine",
                                     "projection-affine"};
    if (with_naive) methods.insert(methods.begin(), "naive");
    cmd->add_option("--method", cfg.method, "approximation method")
        ->check(CLI::IsMember(methods))
        ->capture_default_str();
    cmd->add_option("--pstar", cfg.pstar, "p* for method=fixed-pstar")->capture_default_str();
    cmd->add_option("--pstar-max", cfg.pstar_max, "p* ladder top, or 'auto'")
        ->check([](const std::string& v) -> std::string {
            if (v == "auto") return {};
            try {
                if (std::stod(v) >= 1.0) return {};
            } catch (const std::exception&) {
            }
            return "must be 'auto' or a real >= 1";
        })
        ->capture_default_str();
    cmd->add_option("--tau", cfg.tau, "underflow stability tolerance")->capture_default_str();
    cmd->add_option("--tau-div", cfg.tau_div, "division stability tolerance")
        ->capture_default_str();
}

maxconv::pnorm::MaxConvResult run_method(const MethodConfig& cfg, const Tensor& L,
                                         const Tensor& R) {
    auto out_size = maxconv::shape_product(maxconv::convolution_shape(L.shape(), R.shape()));
    if (cfg.method == "fixed-pstar") {
        return maxconv::pnorm::fixed_pstar_max_convolve(L, R, cfg.pstar, cfg.params());
    }
    if (cfg.method == "piecewise") {
        return maxconv::pnorm::piecewise_max_convolve(L, R, cfg.resolve_pstar_max(out_size),
                                                      cfg.params());
    }
    if (cfg.method == "piecewise-affine") {
        return maxconv::pnorm::piecewise_affine_max_convolve(
            L, R, cfg.resolve_pstar_max(out_size), cfg.params());
    }
    if (cfg.method == "projection-affine") {
        return maxconv::projection::projection_max_convolve(L, R, cfg.resolve_pstar_max(out_size),
                                                            cfg.params());
    }
    throw std::runtime_error("unsupported method: " + cfg.method);
}

// ---------------------------------------------------------------------------
// maxconv
// ---------------------------------------------------------------------------

struct MaxconvArgs {
    std::string left, right, out = "-", format = "csv";
    bool shape_header = false;
    bool with_oracle = false;
    MethodConfig cfg;
};

int cmd_maxconv(const MaxconvArgs& a) {
    Tensor L = maxconv::io::read_tensor_csv(a.left, a.shape_header);
    Tensor R = maxconv::io::read_tensor_csv(a.right, a.shape_header);
    auto out_shape = maxconv::convolution_shape(L.shape(), R.shape());

    std::vector<double> exact;
    if (a.with_oracle) {
        if (maxconv::shape_product(out_shape) > kOracleSizeGuard) {
            throw SizeGuardError("oracle comparison refused: result size exceeds 2^20");
        }
        exact = maxconv::oracle::naive_max_convolve_nd(L, R).values();
    }

    if (a.cfg.method == "naive") {
        auto res = maxconv::oracle::naive_max_convolve_nd(L, R);
        if (a.format == "json") {
            json j{{"shape", res.shape()}, {"method", "naive"}, {"values", res.values()}};
            emit(a.out, j.dump(2) + "\n");
        } else {
            std::string s;
            if (res.rank() > 1) s += shape_line(res.shape());
            s += "index,value\n";
            for (std::size_t m = 0; m < res.size(); ++m) {
                s += std::to_string(m) + "," + fmt(res[m]) + "\n";
            }
            emit(a.out, s);
        }
        return 0;
    }

    auto res = run_method(a.cfg, L, R);
    if (a.format == "json") {
        json j{{"shape", res.values.shape()},
               {"method", maxconv::pnorm::method_name(res.method)},
               {"values", res.values.values()},
               {"ladder", res.ladder},
               {"fft_count", res.fft_count},
               {"exact_evaluations", res.exact_evaluations},
               {"scale", res.scale_l * res.scale_r}};
        json pstar = json::array(), stable = json::array();
        for (std::size_t m = 0; m < res.values.size(); ++m) {
            pstar.push_back(res.pstar_at(m));
            stable.push_back(res.contour.fallback[m] == 0);
        }
        j["pstar"] = std::move(pstar);
        j["stable"] = std::move(stable);
        if (a.with_oracle) j["exact"] = exact;
        emit(a.out, j.dump(2) + "\n");
    } else {
        std::string s;
        if (res.values.rank() > 1) s += shape_line(res.values.shape());
        s += a.with_oracle ? "index,value,pstar,method,stable,exact\n"
                           : "index,value,pstar,method,stable\n";
        for (std::size_t m = 0; m < res.values.size(); ++m) {
            s += std::to_string(m) + "," + fmt(res.values[m]) + "," + fmt(res.pstar_at(m)) + "," +
                 maxconv::pnorm::method_name(res.method) + "," +
                 (res.contour.fallback[m] ? "0" : "1");
            if (a.with_oracle) s += "," + fmt(exact[m]);
            s += "\n";
        }
        emit(a.out, s);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
    std::string left, right, out = "-", format = "csv";
    bool shape_header = false;
    MethodConfig cfg;
};

int cmd_compare(const CompareArgs& a) {
    Tensor L = maxconv::io::read_tensor_csv(a.left, a.shape_header);
    Tensor R = maxconv::io::read_tensor_csv(a.right, a.shape_header);
    auto out_shape = maxconv::convolution_shape(L.shape(), R.shape());
    if (maxconv::shape_product(out_shape) > kOracleSizeGuard) {
        throw SizeGuardError("comparison refused: result size exceeds 2^20");
    }
    auto exact = maxconv::oracle::naive_max_convolve_nd(L, R);
    auto res = run_method(a.cfg, L, R);

    double max_abs = 0.0, max_rel = 0.0, mse = 0.0;
    for (std::size_t m = 0; m < exact.size(); ++m) {
        double abs_err = std::abs(res.values[m] - exact[m]);
        max_abs = std::max(max_abs, abs_err);
        if (exact[m] > 0.0) max_rel = std::max(max_rel, abs_err / exact[m]);
        mse += abs_err * abs_err;
    }
    mse /= static_cast<double>(exact.size());

    if (a.format == "json") {
        json rows = json::array();
        for (std::size_t m = 0; m < exact.size(); ++m) {
            double abs_err = std::abs(res.values[m] - exact[m]);
            rows.push_back({{"index", m},
                            {"exact", exact[m]},
                            {"approx", res.values[m]},
                            {"abs_err", abs_err},
                            {"rel_err", exact[m] > 0.0 ? abs_err / exact[m] : 0.0},
                            {"pstar", res.pstar_at(m)}});
        }
        json j{{"rows", std::move(rows)},
               {"summary",
                {{"max_abs_err", max_abs}, {"max_rel_err", max_rel}, {"mse", mse}}},
               {"method", maxconv::pnorm::method_name(res.method)}};
        emit(a.out, j.dump(2) + "\n");
    } else {
        std::string s = "index,exact,approx,abs_err,rel_err,pstar\n";
        for (std::size_t m = 0; m < exact.size(); ++m) {
            double abs_err = std::abs(res.values[m] - exact[m]);
            s += std::to_string(m) + "," + fmt(exact[m]) + "," + fmt(res.values[m]) + "," +
                 fmt(abs_err) + "," + fmt(exact[m] > 0.0 ? abs_err / exact[m] : 0.0) + "," +
                 fmt(res.pstar_at(m)) + "\n";
        }
        s += "# max_abs_err=" + fmt(max_abs) + "\n";
        s += "# max_rel_err=" + fmt(max_rel) + "\n";
        s += "# mse=" + fmt(mse) + "\n";
        emit(a.out, s);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::vector<std::size_t> sizes{64, 128, 256, 512, 1024, 2048, 4096};
    std::vector<std::string> methods{"naive", "piecewise-affine", "projection-affine"};
    std::size_t reps = 5;
    std::uint64_t seed = 1;
    std::string out = "-";
    MethodConfig cfg;
};

int cmd_bench(const BenchArgs& a) {
    if (a.reps == 0) throw std::runtime_error("--reps must be positive");
    std::string s = "method,k,median_seconds\n";
    for (const auto& method : a.methods) {
        for (std::size_t k : a.sizes) {
            std::vector<double> times;
            for (std::size_t rep = 0; rep < a.reps; ++rep) {
                maxconv::rng::Sampler rng(a.seed + 7919 * k + rep);
                Tensor L = Tensor::vector(rng.uniform_vector(k));
                Tensor R = Tensor::vector(rng.uniform_vector(k));
                auto t0 = std::chrono::steady_clock::now();
                if (method == "naive") {
                    volatile double sink = maxconv::oracle::naive_max_convolve(L, R)[0];
                    (void)sink;
                } else {
                    MethodConfig cfg = a.cfg;
                    cfg.method = method;
                    volatile double sink = run_method(cfg, L, R).values[0];
                    (void)sink;
                }
                auto t1 = std::chrono::steady_clock::now();
                times.push_back(std::chrono::duration<double>(t1 - t0).count());
            }
            std::sort(times.begin(), times.end());
            s += method + "," + std::to_string(k) + "," + fmt(times[times.size() / 2]) + "\n";
        }
    }
    emit(a.out, s);
    return 0;
}

// ---------------------------------------------------------------------------
// viterbi
// ---------------------------------------------------------------------------

struct ViterbiArgs {
    std::string latent, observed, out = "-";
    std::size_t bins_latent = 512, bins_observed = 128;
    double train_split = 1.0;
    double smoothing = 1.0;
    bool compare_exact = false;
    MethodConfig cfg{.method = "projection-affine"};
};

maxconv::hmm::Kernel kernel_of(const std::string& method) {
    if (method == "naive" || method == "exact") return maxconv::hmm::Kernel::Exact;
    if (method == "piecewise" || method == "piecewise-affine") {
        return maxconv::hmm::Kernel::PiecewiseAffine;
    }
    if (method == "projection-affine") return maxconv::hmm::Kernel::ProjectionAffine;
    throw std::runtime_error("unsupported viterbi kernel: " + method);
}

int cmd_viterbi(const ViterbiArgs& a) {
    auto latent_series = maxconv::io::read_series_csv(a.latent);
    auto observed_series = maxconv::io::read_series_csv(a.observed);
    if (latent_series.size() != observed_series.size()) {
        throw std::runtime_error("latent and observed series must have equal length");
    }
    if (!(a.train_split > 0.0 && a.train_split <= 1.0)) {
        throw std::runtime_error("--train-split must lie in (0, 1]");
    }
    auto latent = maxconv::hmm::discretize(latent_series, a.bins_latent);
    auto observed = maxconv::hmm::discretize(observed_series, a.bins_observed);

    auto train_n = static_cast<std::size_t>(a.train_split *
                                            static_cast<double>(latent.indices.size()));
    train_n = std::max<std::size_t>(train_n, 2);
    maxconv::hmm::BinnedSeries latent_train = latent;
    maxconv::hmm::BinnedSeries observed_train = observed;
    latent_train.indices.resize(train_n);
    observed_train.indices.resize(train_n);

    auto model = maxconv::hmm::estimate_empirical_model(latent_train, observed_train,
                                                        a.smoothing);
    double pmax = a.cfg.pstar_max == "auto" ? 0.0 : std::stod(a.cfg.pstar_max);
    auto path = maxconv::hmm::viterbi_additive(model, observed, kernel_of(a.cfg.method), pmax,
                                               a.cfg.params());

    std::string s = "index,state,bin_center\n";
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        s += std::to_string(i) + "," + std::to_string(path.states[i]) + "," +
             fmt(latent.center(path.states[i])) + "\n";
    }
    if (a.compare_exact) {
        auto exact = maxconv::hmm::viterbi_additive(model, observed,
                                                    maxconv::hmm::Kernel::Exact);
        auto stats = maxconv::hmm::compare_paths(exact, path);
        s += "# agreement=" + fmt(stats.agreement) + "\n";
        s += "# max_abs_state_diff=" + std::to_string(stats.max_abs_diff) + "\n";
        s += "# mean_abs_state_diff=" + fmt(stats.mean_abs_diff) + "\n";
        std::cerr << "agreement=" << fmt(stats.agreement)
                  << " max_abs_state_diff=" << stats.max_abs_diff
                  << " mean_abs_state_diff=" << fmt(stats.mean_abs_diff) << "\n";
    }
    emit(a.out, s);
    return 0;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleArgs {
    std::size_t length = 0;
    std::string shape;
    std::string dist = "uniform";
    double alpha = 0.5, beta = 0.5;
    std::uint64_t seed = 1;
    std::string out = "-";
};

int cmd_sample(const SampleArgs& a) {
    std::vector<std::size_t> shape;
    if (!a.shape.empty()) {
        std::istringstream in(a.shape);
        std::size_t ext = 0;
        while (in >> ext) {
            if (ext == 0) throw std::runtime_error("--shape extents must be positive");
            shape.push_back(ext);
        }
        if (shape.empty() || !in.eof()) throw std::runtime_error("bad --shape");
    } else {
        if (a.length == 0) throw std::runtime_error("need --length or --shape");
        shape = {a.length};
    }
    std::size_t n = maxconv::shape_product(shape);
    maxconv::rng::Sampler rng(a.seed);
    std::vector<double> values;
    if (a.dist == "uniform") {
        values = rng.uniform_vector(n);
    } else if (a.dist == "beta") {
        values = rng.beta_vector(n, a.alpha, a.beta);
    } else if (a.dist == "smoothed-uniform") {
        values = rng.smoothed_uniform_vector(n);
    } else {
        throw std::runtime_error("unsupported distribution: " + a.dist);
    }
    std::string s;
    if (shape.size() > 1) s += shape_line(shape);
    for (double v : values) s += fmt(v) + "\n";
    emit(a.out, s);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fast numerical max-convolution toolkit"};
    app.require_subcommand(1);

    MaxconvArgs mc;
    auto* maxconv_cmd = app.add_subcommand("maxconv", "max-convolve two inputs");
    maxconv_cmd->add_option("--left", mc.left, "left operand CSV")->required();
    maxconv_cmd->add_option("--right", mc.right, "right operand CSV")->required();
    maxconv_cmd->add_flag("--shape-header", mc.shape_header, "inputs carry a shape header line");
    maxconv_cmd->add_flag("--with-oracle", mc.with_oracle,
                          "also emit exact values (size-guarded)");
    maxconv_cmd->add_option("--format", mc.format)->check(CLI::IsMember({"csv", "json"}));
    maxconv_cmd->add_option("--out", mc.out, "output path or -");
    add_method_options(maxconv_cmd, mc.cfg, true);

    CompareArgs cp;
    auto* compare_cmd = app.add_subcommand("compare", "compare a method against the exact oracle");
    compare_cmd->add_option("--left", cp.left)->required();
    compare_cmd->add_option("--right", cp.right)->required();
    compare_cmd->add_flag("--shape-header", cp.shape_header);
    compare_cmd->add_option("--format", cp.format)->check(CLI::IsMember({"csv", "json"}));
    compare_cmd->add_option("--out", cp.out);
    add_method_options(compare_cmd, cp.cfg, false);

    BenchArgs bn;
    auto* bench_cmd = app.add_subcommand("bench", "wall-clock table over sizes and methods");
    bench_cmd->add_option("--sizes", bn.sizes)->delimiter(',');
    bench_cmd->add_option("--methods", bn.methods)->delimiter(',');
    bench_cmd->add_option("--reps", bn.reps);
    bench_cmd->add_option("--seed", bn.seed);
    bench_cmd->add_option("--out", bn.out);
    add_method_options(bench_cmd, bn.cfg, true);

    ViterbiArgs vt;
    auto* viterbi_cmd = app.add_subcommand("viterbi", "additive-transition Viterbi decoding");
    viterbi_cmd->add_option("--latent", vt.latent, "latent training series CSV")->required();
    viterbi_cmd->add_option("--observed", vt.observed, "observed series CSV")->required();
    viterbi_cmd->add_option("--bins-latent", vt.bins_latent)->capture_default_str();
    viterbi_cmd->add_option("--bins-observed", vt.bins_observed)->capture_default_str();
    viterbi_cmd->add_option("--train-split", vt.train_split)->capture_default_str();
    viterbi_cmd->add_option("--smoothing", vt.smoothing)->capture_default_str();
    viterbi_cmd->add_flag("--compare-exact", vt.compare_exact,
                          "also decode with the exact kernel and report agreement");
    viterbi_cmd->add_option("--out", vt.out);
    add_method_options(viterbi_cmd, vt.cfg, true);

    SampleArgs sm;
    auto* sample_cmd = app.add_subcommand("sample", "seeded random vector/tensor generator");
    sample_cmd->add_option("--length", sm.length);
    sample_cmd->add_option("--shape", sm.shape, "space-separated extents");
    sample_cmd->add_option("--dist", sm.dist)
        ->check(CLI::IsMember({"uniform", "beta", "smoothed-uniform"}));
    sample_cmd->add_option("--alpha", sm.alpha)->capture_default_str();
    sample_cmd->add_option("--beta", sm.beta)->capture_default_str();
    sample_cmd->add_option("--seed", sm.seed)->capture_default_str();
    sample_cmd->add_option("--out", sm.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*maxconv_cmd) return cmd_maxconv(mc);
        if (*compare_cmd) return cmd_compare(cp);
        if (*bench_cmd) return cmd_bench(bn);
        if (*viterbi_cmd) return cmd_viterbi(vt);
        if (*sample_cmd) return cmd_sample(sm);
    } catch (const SizeGuardError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
