#include "maxconv/oracle.hpp"

#include <algorithm>

namespace maxconv::oracle {

namespace {

void require_rank1(const Tensor& L, const Tensor& R) {
    if (L.rank() != 1 || R.rank() != 1) {
        throw std::invalid_argument("expected rank-1 tensors");
    }
}

void require_equal_rank(const Tensor& L, const Tensor& R) {
    if (L.rank() != R.rank()) {
        throw std::invalid_argument("max-convolution operands must have equal rank");
    }
}

}  // namespace

Tensor naive_max_convolve(const Tensor& L, const Tensor& R) {
    require_rank1(L, R);
    require_nonnegative(L, "L");
    require_nonnegative(R, "R");
    const auto& l = L.values();
    const auto& r = R.values();
    std::size_t n = l.size() + r.size() - 1;
    std::vector<double> out(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        std::size_t lo = m >= r.size() ? m - (r.size() - 1) : 0;
        std::size_t hi = std::min(l.size() - 1, m);
        double best = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            best = std::max(best, l[i] * r[m - i]);
        }
        out[m] = best;
    }
    return Tensor::vector(std::move(out));
}

double max_convolution_at_index(const Tensor& L, const Tensor& R, std::size_t m) {
    require_rank1(L, R);
    const auto& l = L.values();
    const auto& r = R.values();
    if (m >= l.size() + r.size() - 1) {
        throw std::invalid_argument("result index out of range");
    }
    std::size_t lo = m >= r.size() ? m - (r.size() - 1) : 0;
    std::size_t hi = std::min(l.size() - 1, m);
    double best = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        best = std::max(best, l[i] * r[m - i]);
    }
    return best;
}

Tensor naive_max_convolve_nd(const Tensor& L, const Tensor& R) {
    require_equal_rank(L, R);
    require_nonnegative(L, "L");
    require_nonnegative(R, "R");
    auto out_shape = convolution_shape(L.shape(), R.shape());
    Tensor out = Tensor::zeros(out_shape);
    std::vector<std::size_t> cell(out_shape.size(), 0);
    std::size_t flat = 0;
    do {
        out[flat++] = max_convolution_at_cell(L, R, cell);
    } while (next_index(cell, out_shape));
    return out;
}

double max_convolution_at_cell(const Tensor& L, const Tensor& R,
                               std::span<const std::size_t> cell) {
    require_equal_rank(L, R);
    std::size_t rank = L.rank();
    if (cell.size() != rank) {
        throw std::invalid_argument("result cell rank mismatch");
    }
    // Per-axis bounds of the L-index box that keeps both operands in range.
    std::vector<std::size_t> lo(rank), box(rank);
    for (std::size_t d = 0; d < rank; ++d) {
        std::size_t el = L.extent(d), er = R.extent(d);
        if (cell[d] >= el + er - 1) {
            throw std::invalid_argument("result cell out of range");
        }
        lo[d] = cell[d] >= er ? cell[d] - (er - 1) : 0;
        std::size_t hi = std::min(el - 1, cell[d]);
        box[d] = hi - lo[d] + 1;
    }
    auto strides_l = row_major_strides(L.shape());
    auto strides_r = row_major_strides(R.shape());
    std::vector<std::size_t> off(rank, 0);
    double best = 0.0;
    do {
        std::size_t fl = 0, fr = 0;
        for (std::size_t d = 0; d < rank; ++d) {
            std::size_t li = lo[d] + off[d];
            fl += li * strides_l[d];
            fr += (cell[d] - li) * strides_r[d];
        }
        best = std::max(best, L[fl] * R[fr]);
    } while (next_index(off, box));
    return best;
}

std::size_t overlap_length(std::size_t len_l, std::size_t len_r, std::size_t m) {
    if (m >= len_l + len_r - 1) {
        throw std::invalid_argument("result index out of range");
    }
    std::size_t lo = m >= len_r ? m - (len_r - 1) : 0;
    std::size_t hi = std::min(len_l - 1, m);
    return hi - lo + 1;
}

std::size_t overlap_count(std::span<const std::size_t> shape_l,
                          std::span<const std::size_t> shape_r,
                          std::span<const std::size_t> cell) {
    if (shape_l.size() != shape_r.size() || cell.size() != shape_l.size()) {
        throw std::invalid_argument("overlap_count rank mismatch");
    }
    std::size_t n = 1;
    for (std::size_t d = 0; d < cell.size(); ++d) {
        n *= overlap_length(shape_l[d], shape_r[d], cell[d]);
    }
    return n;
}

}  // namespace maxconv::oracle
