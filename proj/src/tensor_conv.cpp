// Convolutions lowered to im2col + matmul so the hot loops are the same
// cache-friendly kernels used by matmul. Patch/scatter passes are memory-bound
// and stay single-threaded; matmuls parallelize with thread-count-invariant
// results.

#include <vector>

#include "iform/tensor.hpp"
#include "iform/threading.hpp"

namespace iform {

namespace {

struct ConvDims {
    std::size_t ci, h, w, co, kh, kw, ho, wo;
    int stride, pad;
};

ConvDims conv_dims(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                   int pad, bool transposed) {
    if (input.rank() != 3 || weight.rank() != 4 || bias.rank() != 1)
        throw ShapeError("conv: expected input rank 3, weight rank 4, bias rank 1; got " +
                         shape_str(input.shape()) + ", " + shape_str(weight.shape()) + ", " +
                         shape_str(bias.shape()));
    if (stride < 1 || pad < 0) throw ContractError("conv: stride must be >= 1 and pad >= 0");
    ConvDims d{};
    d.ci = input.shape()[0];
    d.h = input.shape()[1];
    d.w = input.shape()[2];
    d.stride = stride;
    d.pad = pad;
    d.kh = weight.shape()[2];
    d.kw = weight.shape()[3];
    if (!transposed) {
        d.co = weight.shape()[0];
        if (weight.shape()[1] != d.ci)
            throw ShapeError("conv2d: weight in-channels " + shape_str(weight.shape()) +
                             " do not match input " + shape_str(input.shape()));
        if (d.h + 2 * static_cast<std::size_t>(pad) < d.kh ||
            d.w + 2 * static_cast<std::size_t>(pad) < d.kw)
            throw ShapeError("conv2d: kernel larger than padded input");
        d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
        d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
    } else {
        d.co = weight.shape()[1];
        if (weight.shape()[0] != d.ci)
            throw ShapeError("conv_transpose2d: weight in-channels " + shape_str(weight.shape()) +
                             " do not match input " + shape_str(input.shape()));
        d.ho = (d.h - 1) * stride + d.kh - 2 * pad;
        d.wo = (d.w - 1) * stride + d.kw - 2 * pad;
    }
    if (bias.shape()[0] != d.co)
        throw ShapeError("conv: bias " + shape_str(bias.shape()) + " does not match out-channels");
    return d;
}

// matmul kernels on raw buffers (same loop structures as the tensor op).
void mm_accum(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
              std::size_t n) {
    parallel_for(m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* crow = C + i * n;
            const double* arow = A + i * k;
            for (std::size_t kk = 0; kk < k; ++kk) {
                double a = arow[kk];
                const double* brow = B + kk * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
            }
        }
    });
}

void mm_bt_accum(const double* A, const double* Bt, double* C, std::size_t m, std::size_t k,
                 std::size_t n) {
    parallel_for(m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* arow = A + i * k;
            double* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = Bt + j * k;
                double s = 0.0;
                for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
                crow[j] += s;
            }
        }
    });
}

void mm_at_accum(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
                 std::size_t n) {
    parallel_for(k, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t kk = lo; kk < hi; ++kk) {
            double* crow = C + kk * n;
            for (std::size_t i = 0; i < m; ++i) {
                double a = A[i * k + kk];
                const double* brow = B + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
            }
        }
    });
}

// Patch matrix: rows = output positions (oy*wo+ox), cols = (ci,ky,kx);
// out-of-range taps read zero.
std::vector<double> im2col(const double* in, const ConvDims& d) {
    std::size_t ckk = d.ci * d.kh * d.kw;
    std::vector<double> p(d.ho * d.wo * ckk, 0.0);
    for (std::size_t ci = 0; ci < d.ci; ++ci) {
        const double* iplane = in + ci * d.h * d.w;
        for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                std::size_t col = (ci * d.kh + ky) * d.kw + kx;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    long iy = static_cast<long>(oy) * d.stride - d.pad + static_cast<long>(ky);
                    if (iy < 0 || iy >= static_cast<long>(d.h)) continue;
                    const double* irow = iplane + iy * d.w;
                    double* prow = p.data() + (oy * d.wo) * ckk + col;
                    long ix0 = -d.pad + static_cast<long>(kx);
                    // valid ox range: 0 <= ix0 + ox*stride < w
                    std::size_t ox_lo = 0;
                    if (ix0 < 0)
                        ox_lo = static_cast<std::size_t>((-ix0 + d.stride - 1) / d.stride);
                    for (std::size_t ox = ox_lo; ox < d.wo; ++ox) {
                        long ix = ix0 + static_cast<long>(ox) * d.stride;
                        if (ix >= static_cast<long>(d.w)) break;
                        prow[ox * ckk] = irow[ix];
                    }
                }
            }
    }
    return p;
}

// Transposed scatter of a patch-gradient matrix back into the input layout.
void col2im_accum(const double* p, const ConvDims& d, double* din) {
    std::size_t ckk = d.ci * d.kh * d.kw;
    for (std::size_t ci = 0; ci < d.ci; ++ci) {
        double* iplane = din + ci * d.h * d.w;
        for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                std::size_t col = (ci * d.kh + ky) * d.kw + kx;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    long iy = static_cast<long>(oy) * d.stride - d.pad + static_cast<long>(ky);
                    if (iy < 0 || iy >= static_cast<long>(d.h)) continue;
                    double* irow = iplane + iy * d.w;
                    const double* prow = p + (oy * d.wo) * ckk + col;
                    long ix0 = -d.pad + static_cast<long>(kx);
                    std::size_t ox_lo = 0;
                    if (ix0 < 0)
                        ox_lo = static_cast<std::size_t>((-ix0 + d.stride - 1) / d.stride);
                    for (std::size_t ox = ox_lo; ox < d.wo; ++ox) {
                        long ix = ix0 + static_cast<long>(ox) * d.stride;
                        if (ix >= static_cast<long>(d.w)) break;
                        irow[ix] += prow[ox * ckk];
                    }
                }
            }
    }
}

// {C,H,W} plane-major <-> (H*W x C) row-major
std::vector<double> planes_to_rows(const double* v, std::size_t c, std::size_t hw) {
    std::vector<double> m(hw * c);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < hw; ++i) m[i * c + ch] = v[ch * hw + i];
    return m;
}

void rows_to_planes_accum(const double* m, std::size_t c, std::size_t hw, double* v) {
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < hw; ++i) v[ch * hw + i] += m[i * c + ch];
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    ConvDims d = conv_dims(input, weight, bias, stride, pad, false);
    std::size_t ckk = d.ci * d.kh * d.kw;
    std::size_t n_out = d.ho * d.wo;

    std::vector<double> patches = im2col(input.data().data(), d);
    // out_rows (n_out x co) = patches (n_out x ckk) * W^T, W stored (co x ckk)
    std::vector<double> out_rows(n_out * d.co, 0.0);
    mm_bt_accum(patches.data(), weight.data().data(), out_rows.data(), n_out, ckk, d.co);

    std::vector<double> out(d.co * n_out);
    const double* bs = bias.data().data();
    for (std::size_t co = 0; co < d.co; ++co)
        for (std::size_t i = 0; i < n_out; ++i) out[co * n_out + i] = out_rows[i * d.co + co] + bs[co];

    return Tensor::make_op(
        {d.co, d.ho, d.wo}, std::move(out), {input, weight, bias},
        [d, ckk, n_out, patches = std::move(patches)](Tensor::Node& self) {
            const double* g = self.scratch.data();
            std::vector<double> g_rows = planes_to_rows(g, d.co, n_out);

            if (self.parents[1]->requires_grad)  // dW (co x ckk) = g_rows^T * patches
                mm_at_accum(g_rows.data(), patches.data(), self.parents[1]->scratch.data(), n_out,
                            d.co, ckk);
            if (self.parents[0]->requires_grad) {  // dP = g_rows * W, then col2im
                std::vector<double> dp(n_out * ckk, 0.0);
                mm_accum(g_rows.data(), self.parents[1]->value.data(), dp.data(), n_out, d.co,
                         ckk);
                col2im_accum(dp.data(), d, self.parents[0]->scratch.data());
            }
            if (self.parents[2]->requires_grad) {
                double* db = self.parents[2]->scratch.data();
                for (std::size_t co = 0; co < d.co; ++co) {
                    double s = 0.0;
                    const double* gp = g + co * n_out;
                    for (std::size_t i = 0; i < n_out; ++i) s += gp[i];
                    db[co] += s;
                }
            }
        });
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                        int pad) {
    ConvDims d = conv_dims(input, weight, bias, stride, pad, true);
    std::size_t n_in = d.h * d.w;
    std::size_t cokk = d.co * d.kh * d.kw;

    // The transposed conv is the adjoint of a stride/pad conv that maps the
    // {co, ho, wo} side to the {ci, h, w} side; reuse the same patch geometry
    // with the roles of input and output swapped.
    ConvDims adj = d;
    adj.ci = d.co;
    adj.h = d.ho;
    adj.w = d.wo;
    adj.co = d.ci;
    adj.ho = d.h;
    adj.wo = d.w;

    // cols (n_in x cokk) = x_rows (n_in x ci) * W_mat (ci x cokk)
    std::vector<double> x_rows = planes_to_rows(input.data().data(), d.ci, n_in);
    std::vector<double> cols(n_in * cokk, 0.0);
    mm_accum(x_rows.data(), weight.data().data(), cols.data(), n_in, d.ci, cokk);

    std::vector<double> out(d.co * d.ho * d.wo, 0.0);
    col2im_accum(cols.data(), adj, out.data());
    const double* bs = bias.data().data();
    for (std::size_t co = 0; co < d.co; ++co)
        for (std::size_t i = 0; i < d.ho * d.wo; ++i) out[co * d.ho * d.wo + i] += bs[co];

    return Tensor::make_op(
        {d.co, d.ho, d.wo}, std::move(out), {input, weight, bias},
        [d, adj, n_in, cokk, x_rows = std::move(x_rows)](Tensor::Node& self) {
            const double* g = self.scratch.data();
            bool need_in = self.parents[0]->requires_grad;
            bool need_w = self.parents[1]->requires_grad;
            if (need_in || need_w) {
                std::vector<double> dcols = im2col(g, adj);  // (n_in x cokk)
                if (need_w)  // dW (ci x cokk) = x_rows^T * dcols
                    mm_at_accum(x_rows.data(), dcols.data(), self.parents[1]->scratch.data(),
                                n_in, d.ci, cokk);
                if (need_in) {  // dX_rows (n_in x ci) = dcols * W^T
                    std::vector<double> dx_rows(n_in * d.ci, 0.0);
                    mm_bt_accum(dcols.data(), self.parents[1]->value.data(), dx_rows.data(), n_in,
                                cokk, d.ci);
                    rows_to_planes_accum(dx_rows.data(), d.ci, n_in,
                                         self.parents[0]->scratch.data());
                }
            }
            if (self.parents[2]->requires_grad) {
                double* db = self.parents[2]->scratch.data();
                for (std::size_t co = 0; co < d.co; ++co) {
                    double s = 0.0;
                    const double* gp = g + co * d.ho * d.wo;
                    for (std::size_t i = 0; i < d.ho * d.wo; ++i) s += gp[i];
                    db[co] += s;
                }
            }
        });
}

}  // namespace iform
