#include "maxconv/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace maxconv::fft {

namespace {

// The FFTW planner is not thread-safe; plan creation/destruction is
// serialized. Execution via the new-array interface needs no lock.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

double* alloc_real(std::size_t n) {
    auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    if (!p) throw std::bad_alloc();
    return p;
}

fftw_complex* alloc_complex(std::size_t n) {
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!p) throw std::bad_alloc();
    return p;
}

// Copies dense rows into the zero-padded layout. The pad region of dst must
// already be zero and stays zero, so a reused workspace never re-clears it.
void pack_rows(std::span<const double> src, std::span<const std::size_t> shape,
               std::span<const std::size_t> padded_strides, double* dst) {
    std::size_t row = shape.back();
    if (shape.size() == 1) {
        std::copy(src.begin(), src.end(), dst);
        return;
    }
    std::vector<std::size_t> idx(shape.size() - 1, 0);
    auto lead_shape = shape.first(shape.size() - 1);
    std::size_t flat_src = 0;
    do {
        std::size_t flat_dst = 0;
        for (std::size_t d = 0; d + 1 < shape.size(); ++d) flat_dst += idx[d] * padded_strides[d];
        std::copy(src.begin() + flat_src, src.begin() + flat_src + row, dst + flat_dst);
        flat_src += row;
    } while (maxconv::next_index(idx, lead_shape));
}

}  // namespace

struct ConvolutionPlan::Workspace::Impl {
    double* real_a = nullptr;
    double* real_b = nullptr;
    double* real_out = nullptr;
    fftw_complex* cplx_a = nullptr;
    fftw_complex* cplx_b = nullptr;

    ~Impl() {
        fftw_free(real_a);
        fftw_free(real_b);
        fftw_free(real_out);
        fftw_free(cplx_a);
        fftw_free(cplx_b);
    }
};

ConvolutionPlan::Workspace::Workspace(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ConvolutionPlan::Workspace::~Workspace() = default;
ConvolutionPlan::Workspace::Workspace(Workspace&&) noexcept = default;
ConvolutionPlan::Workspace& ConvolutionPlan::Workspace::operator=(Workspace&&) noexcept =
    default;

struct ConvolutionPlan::Impl {
    std::vector<std::size_t> shape_a, shape_b, out_shape, padded;
    std::vector<std::size_t> padded_strides;
    std::size_t padded_total = 0;
    std::size_t complex_total = 0;
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;

    ~Impl() {
        if (forward || inverse) {
            std::lock_guard<std::mutex> lock(planner_mutex());
            if (forward) fftw_destroy_plan(forward);
            if (inverse) fftw_destroy_plan(inverse);
        }
    }
};

ConvolutionPlan::ConvolutionPlan(std::vector<std::size_t> shape_a,
                                 std::vector<std::size_t> shape_b)
    : impl_(std::make_unique<Impl>()) {
    impl_->out_shape = convolution_shape(shape_a, shape_b);
    impl_->shape_a = std::move(shape_a);
    impl_->shape_b = std::move(shape_b);
    impl_->padded.resize(impl_->out_shape.size());
    for (std::size_t d = 0; d < impl_->out_shape.size(); ++d) {
        impl_->padded[d] = next_pow2(impl_->out_shape[d]);
    }
    impl_->padded_strides = row_major_strides(impl_->padded);
    impl_->padded_total = shape_product(impl_->padded);
    // r2c output keeps floor(n/2)+1 complex values along the last axis.
    impl_->complex_total = impl_->padded_total / impl_->padded.back() *
                           (impl_->padded.back() / 2 + 1);

    std::vector<int> dims(impl_->padded.begin(), impl_->padded.end());
    double* real = alloc_real(impl_->padded_total);
    fftw_complex* cplx = alloc_complex(impl_->complex_total);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        impl_->forward = fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), real,
                                           cplx, FFTW_ESTIMATE);
        impl_->inverse = fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(), cplx,
                                           real, FFTW_ESTIMATE);
    }
    fftw_free(real);
    fftw_free(cplx);
    if (!impl_->forward || !impl_->inverse) {
        throw std::runtime_error("failed to create FFT plan");
    }
}

ConvolutionPlan::~ConvolutionPlan() = default;
ConvolutionPlan::ConvolutionPlan(ConvolutionPlan&&) noexcept = default;
ConvolutionPlan& ConvolutionPlan::operator=(ConvolutionPlan&&) noexcept = default;

const std::vector<std::size_t>& ConvolutionPlan::result_shape() const {
    return impl_->out_shape;
}

std::size_t ConvolutionPlan::result_size() const {
    return shape_product(impl_->out_shape);
}

const std::vector<std::size_t>& ConvolutionPlan::padded_shape() const {
    return impl_->padded;
}

ConvolutionPlan::Workspace ConvolutionPlan::make_workspace() const {
    auto ws = std::make_unique<Workspace::Impl>();
    ws->real_a = alloc_real(impl_->padded_total);
    ws->real_b = alloc_real(impl_->padded_total);
    ws->real_out = alloc_real(impl_->padded_total);
    ws->cplx_a = alloc_complex(impl_->complex_total);
    ws->cplx_b = alloc_complex(impl_->complex_total);
    std::fill(ws->real_a, ws->real_a + impl_->padded_total, 0.0);
    std::fill(ws->real_b, ws->real_b + impl_->padded_total, 0.0);
    return Workspace(std::move(ws));
}

void ConvolutionPlan::convolve_into(Workspace& ws, std::span<const double> a,
                                    std::span<const double> b, std::span<double> out) const {
    if (a.size() != shape_product(impl_->shape_a) || b.size() != shape_product(impl_->shape_b)) {
        throw std::invalid_argument("operand size does not match plan shapes");
    }
    if (out.size() != result_size()) {
        throw std::invalid_argument("output size does not match the result shape");
    }
    Workspace::Impl& w = *ws.impl_;

    pack_rows(a, impl_->shape_a, impl_->padded_strides, w.real_a);
    fftw_execute_dft_r2c(impl_->forward, w.real_a, w.cplx_a);
    pack_rows(b, impl_->shape_b, impl_->padded_strides, w.real_b);
    fftw_execute_dft_r2c(impl_->forward, w.real_b, w.cplx_b);

    const double scale = 1.0 / static_cast<double>(impl_->padded_total);
    for (std::size_t i = 0; i < impl_->complex_total; ++i) {
        double re = w.cplx_a[i][0] * w.cplx_b[i][0] - w.cplx_a[i][1] * w.cplx_b[i][1];
        double im = w.cplx_a[i][0] * w.cplx_b[i][1] + w.cplx_a[i][1] * w.cplx_b[i][0];
        w.cplx_a[i][0] = re * scale;
        w.cplx_a[i][1] = im * scale;
    }
    fftw_execute_dft_c2r(impl_->inverse, w.cplx_a, w.real_out);

    const std::size_t row = impl_->out_shape.back();
    if (impl_->out_shape.size() == 1) {
        std::copy(w.real_out, w.real_out + row, out.begin());
        return;
    }
    std::vector<std::size_t> idx(impl_->out_shape.size() - 1, 0);
    std::span<const std::size_t> lead_shape{impl_->out_shape.data(), impl_->out_shape.size() - 1};
    std::size_t flat = 0;
    do {
        std::size_t src = 0;
        for (std::size_t d = 0; d + 1 < impl_->out_shape.size(); ++d) {
            src += idx[d] * impl_->padded_strides[d];
        }
        std::copy(w.real_out + src, w.real_out + src + row, out.begin() + flat);
        flat += row;
    } while (maxconv::next_index(idx, lead_shape));
}

std::vector<double> ConvolutionPlan::convolve(std::span<const double> a,
                                              std::span<const double> b) const {
    Workspace ws = make_workspace();
    std::vector<double> out(result_size());
    convolve_into(ws, a, b, out);
    return out;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("convolution operands must be nonempty");
    }
    for (double v : a) {
        if (!std::isfinite(v)) throw std::invalid_argument("convolution operands must be finite");
    }
    for (double v : b) {
        if (!std::isfinite(v)) throw std::invalid_argument("convolution operands must be finite");
    }
    ConvolutionPlan plan({a.size()}, {b.size()});
    return plan.convolve(a, b);
}

std::vector<double> fft_convolve_nd(const Tensor& a, const Tensor& b) {
    ConvolutionPlan plan(a.shape(), b.shape());
    return plan.convolve(a.values(), b.values());
}

}  // namespace maxconv::fft
