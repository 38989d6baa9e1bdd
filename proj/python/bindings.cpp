// Python bindings for the max-convolution toolkit.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "maxconv/hmm.hpp"
#include "maxconv/oracle.hpp"
#include "maxconv/pnorm.hpp"
#include "maxconv/projection.hpp"
#include "maxconv/tensor.hpp"

namespace py = pybind11;
using namespace maxconv;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t d = 0; d < a.ndim(); ++d) shape[d] = static_cast<std::size_t>(a.shape(d));
    std::vector<double> values(a.data(), a.data() + a.size());
    if (shape.empty()) shape = {1};
    return Tensor(std::move(shape), std::move(values));
}

py::array_t<double> array_from_values(const std::vector<std::size_t>& shape,
                                      const std::vector<double>& values) {
    std::vector<py::ssize_t> dims(shape.begin(), shape.end());
    py::array_t<double> out(dims);
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

pnorm::Params params_of(double tau, double tau_div) { return {tau, tau_div}; }

template <typename T>
py::array_t<T> array_1d(std::size_t n) {
    return py::array_t<T>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(n)});
}

pnorm::MaxConvResult dispatch(const Tensor& L, const Tensor& R, const std::string& method,
                              double pstar_max, double pstar, const pnorm::Params& prm) {
    std::size_t out_size = shape_product(convolution_shape(L.shape(), R.shape()));
    if (method == "fixed-pstar") return pnorm::fixed_pstar_max_convolve(L, R, pstar, prm);
    if (method == "projection-affine") {
        return projection::projection_max_convolve(L, R, pstar_max > 0 ? pstar_max : 64.0, prm);
    }
    double pmax = pstar_max > 0 ? pstar_max
                                : pnorm::select_pstar_max(std::max<std::size_t>(out_size, 2),
                                                          prm.tau);
    if (method == "piecewise") return pnorm::piecewise_max_convolve(L, R, pmax, prm);
    if (method == "piecewise-affine") {
        return pnorm::piecewise_affine_max_convolve(L, R, pmax, prm);
    }
    throw std::invalid_argument("unknown method: " + method);
}

py::dict result_dict(const pnorm::MaxConvResult& res) {
    py::dict d;
    d["values"] = array_from_values(res.values.shape(), res.values.values());
    d["method"] = pnorm::method_name(res.method);
    d["ladder"] = res.ladder;
    d["fft_count"] = res.fft_count;
    d["exact_evaluations"] = res.exact_evaluations;
    d["scale"] = res.scale_l * res.scale_r;
    auto pstar = array_1d<double>(res.values.size());
    auto stable = array_1d<bool>(res.values.size());
    auto pre = array_1d<double>(res.values.size());
    for (std::size_t m = 0; m < res.values.size(); ++m) {
        pstar.mutable_data()[m] = res.pstar_at(m);
        stable.mutable_data()[m] = res.contour.fallback[m] == 0;
        pre.mutable_data()[m] = res.pre_correction[m] * res.scale_l * res.scale_r;
    }
    d["pstar"] = std::move(pstar);
    d["stable"] = std::move(stable);
    d["pre_correction"] = std::move(pre);
    return d;
}

}  // namespace

PYBIND11_MODULE(_maxconv, m) {
    m.doc() = "Fast numerical max-convolution of nonnegative vectors and tensors";
    using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

    m.def(
        "naive_max_convolve",
        [](const DArray& L, const DArray& R) {
            auto res = oracle::naive_max_convolve_nd(tensor_from_array(L), tensor_from_array(R));
            return array_from_values(res.shape(), res.values());
        },
        py::arg("L"), py::arg("R"), "Exact quadratic-time max-convolution.");

    m.def(
        "max_convolution_at_index",
        [](const DArray& L, const DArray& R, std::size_t m) {
            return oracle::max_convolution_at_index(tensor_from_array(L), tensor_from_array(R),
                                                    m);
        },
        py::arg("L"), py::arg("R"), py::arg("m"));

    m.def(
        "max_convolve",
        [](const DArray& L, const DArray& R, const std::string& method, double pstar_max,
           double pstar, double tau, double tau_div, bool full) -> py::object {
            auto res = dispatch(tensor_from_array(L), tensor_from_array(R), method, pstar_max,
                                pstar, params_of(tau, tau_div));
            if (full) return result_dict(res);
            return array_from_values(res.values.shape(), res.values.values());
        },
        py::arg("L"), py::arg("R"), py::arg("method") = "projection-affine",
        py::arg("pstar_max") = 0.0, py::arg("pstar") = 8.0, py::arg("tau") = 1e-12,
        py::arg("tau_div") = 1e-10, py::arg("full") = false,
        "Approximate max-convolution; method is one of fixed-pstar, piecewise, "
        "piecewise-affine, projection-affine. pstar_max <= 0 selects the default "
        "(the heuristic ladder top, or 64 for the projection method). With "
        "full=True returns a dict with per-index diagnostics.");

    m.def(
        "max_convolve_given_pstar",
        [](const DArray& L, const DArray& R, double pstar) {
            Tensor Ls = tensor_from_array(L), Rs = tensor_from_array(R);
            auto values = pnorm::max_convolve_given_pstar(Ls, Rs, pstar);
            return array_from_values(convolution_shape(Ls.shape(), Rs.shape()), values);
        },
        py::arg("L_scaled"), py::arg("R_scaled"), py::arg("pstar"),
        "Single fixed-p* estimate on unit-scaled inputs.");

    m.def(
        "max_deconvolve",
        [](const DArray& M, const DArray& L, double pstar, double tau, double tau_div) {
            auto res = pnorm::max_deconvolve(tensor_from_array(M), tensor_from_array(L), pstar,
                                             params_of(tau, tau_div));
            return py::make_tuple(array_from_values(res.values.shape(), res.values.values()),
                                  res.unstable);
        },
        py::arg("M"), py::arg("L"), py::arg("pstar") = 8.0, py::arg("tau") = 1e-12,
        py::arg("tau_div") = 1e-10,
        "Max-deconvolution via the transform ratio; returns (values, unstable_flag).");

    m.def("select_pstar_max", &pnorm::select_pstar_max, py::arg("k"), py::arg("tau") = 1e-12);
    m.def("pstar_mode_piecewise", &pnorm::pstar_mode_piecewise, py::arg("k"),
          py::arg("tau") = 1e-12);
    m.def("error_bound_fixed", &pnorm::error_bound_fixed, py::arg("k_m"), py::arg("pstar"));
    m.def("error_bound_middle_contour", &pnorm::error_bound_middle_contour, py::arg("k_m"),
          py::arg("pstar"), py::arg("tau") = 1e-12);
    m.def("projection_pstar_max_for_error", &projection::projection_pstar_max_for_error,
          py::arg("eps"));
    m.def("projection_error_mode", &projection::projection_error_mode, py::arg("tau") = 1e-12);

    m.def(
        "t_ratio",
        [](const DArray& v, double spacing) {
            bool degenerate = false;
            std::span<const double> span{v.data(), static_cast<std::size_t>(v.size())};
            double t = projection::t_ratio(span, spacing, &degenerate);
            return py::make_tuple(t, degenerate);
        },
        py::arg("v"), py::arg("spacing") = 1.0,
        "Quadratic-projection ratio before the final root; returns (t, degenerate).");

    m.def(
        "max_quad",
        [](double est1, double est2, double est3, double est4, double spacing, double tau_div) {
            return projection::max_quad({est1, est2, est3, est4, spacing}, tau_div);
        },
        py::arg("est1"), py::arg("est2"), py::arg("est3"), py::arg("est4"),
        py::arg("spacing") = 1.0, py::arg("tau_div") = 1e-10);
    m.def("max_lin", &projection::max_lin, py::arg("est3"), py::arg("est4"),
          py::arg("spacing") = 1.0, py::arg("tau_div") = 1e-10);

    m.def(
        "discretize",
        [](const DArray& series, std::size_t bins) {
            std::span<const double> span{series.data(), static_cast<std::size_t>(series.size())};
            auto b = hmm::discretize(span, bins);
            py::dict d;
            d["bins"] = b.bins;
            d["edges"] = b.edges;
            auto idx = array_1d<std::size_t>(b.indices.size());
            std::copy(b.indices.begin(), b.indices.end(), idx.mutable_data());
            d["indices"] = std::move(idx);
            return d;
        },
        py::arg("series"), py::arg("bins"));

    m.def(
        "estimate_empirical_model",
        [](const std::vector<std::size_t>& latent, std::size_t latent_bins,
           const std::vector<std::size_t>& observed, std::size_t observed_bins,
           double smoothing) {
            hmm::BinnedSeries lat{latent_bins, std::vector<double>(latent_bins + 1, 0.0), latent};
            hmm::BinnedSeries obs{observed_bins, std::vector<double>(observed_bins + 1, 0.0),
                                  observed};
            auto model = hmm::estimate_empirical_model(lat, obs, smoothing);
            py::dict d;
            d["prior"] = array_from_values({model.states}, model.prior);
            d["likelihood"] = array_from_values({model.obs_bins, model.states}, model.likelihood);
            d["delta"] = array_from_values({2 * model.states - 1}, model.delta);
            return d;
        },
        py::arg("latent_indices"), py::arg("latent_bins"), py::arg("observed_indices"),
        py::arg("observed_bins"), py::arg("smoothing") = 1.0);

    m.def(
        "viterbi_additive",
        [](const DArray& prior, const DArray& likelihood, const DArray& delta,
           const std::vector<std::size_t>& observations, const std::string& kernel,
           double pstar_max) {
            if (likelihood.ndim() != 2) {
                throw std::invalid_argument("likelihood must be a 2-D array");
            }
            hmm::AdditiveHmmModel model;
            model.states = static_cast<std::size_t>(prior.size());
            model.obs_bins = static_cast<std::size_t>(likelihood.shape(0));
            model.prior.assign(prior.data(), prior.data() + prior.size());
            model.likelihood.assign(likelihood.data(), likelihood.data() + likelihood.size());
            model.delta.assign(delta.data(), delta.data() + delta.size());
            hmm::BinnedSeries obs{model.obs_bins,
                                  std::vector<double>(model.obs_bins + 1, 0.0), observations};
            hmm::Kernel kind = hmm::Kernel::Exact;
            if (kernel == "piecewise-affine") kind = hmm::Kernel::PiecewiseAffine;
            else if (kernel == "projection-affine") kind = hmm::Kernel::ProjectionAffine;
            else if (kernel != "exact") throw std::invalid_argument("unknown kernel: " + kernel);
            auto path = hmm::viterbi_additive(model, obs, kind, pstar_max);
            auto out = array_1d<std::size_t>(path.states.size());
            std::copy(path.states.begin(), path.states.end(), out.mutable_data());
            return out;
        },
        py::arg("prior"), py::arg("likelihood"), py::arg("delta"), py::arg("observations"),
        py::arg("kernel") = "exact", py::arg("pstar_max") = 0.0,
        "Viterbi decoding for an HMM with an additive (Toeplitz) transition kernel.");

    m.def(
        "compare_paths",
        [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
            auto stats = hmm::compare_paths({a}, {b});
            py::dict d;
            d["agreement"] = stats.agreement;
            d["max_abs_diff"] = stats.max_abs_diff;
            d["mean_abs_diff"] = stats.mean_abs_diff;
            return d;
        },
        py::arg("exact"), py::arg("approx"));

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
