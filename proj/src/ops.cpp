#include "acol/ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "acol/threading.hpp"

namespace acol {

namespace {

int64_t ceil_div(int64_t a, int64_t b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

template <typename T>
void validate_conv_args(const Tensor<T>& input, const ConvLayer<T>& layer) {
    if (input.rank() != 4) {
        throw std::invalid_argument("conv2d: input must be [N,C,H,W], got " + input.shape_str());
    }
    if (layer.weights.rank() != 4 || layer.weights.dim(2) != layer.weights.dim(3)) {
        throw std::invalid_argument("conv2d: weights must be [out,in,k,k], got " +
                                    layer.weights.shape_str());
    }
    if (layer.bias.rank() != 1 || layer.bias.dim(0) != layer.weights.dim(0)) {
        throw std::invalid_argument("conv2d: bias " + layer.bias.shape_str() +
                                    " does not match weights " + layer.weights.shape_str());
    }
    if (input.dim(1) != layer.in_channels()) {
        throw std::invalid_argument("conv2d: input channels mismatch, input " + input.shape_str() +
                                    " vs weights " + layer.weights.shape_str());
    }
    if (layer.stride < 1 || layer.pad < 0) {
        throw std::invalid_argument("conv2d: stride must be >= 1 and pad >= 0");
    }
}

// Gathers the zero-padded receptive fields of one sample into a
// [in_ch*k*k, out_h*out_w] matrix.
template <typename T>
void im2col(const T* in, int64_t channels, int64_t h, int64_t w, int64_t k, int64_t stride,
            int64_t pad, int64_t out_h, int64_t out_w, T* col) {
    for (int64_t ci = 0; ci < channels; ++ci) {
        for (int64_t kh = 0; kh < k; ++kh) {
            for (int64_t kw = 0; kw < k; ++kw) {
                T* row = col + ((ci * k + kh) * k + kw) * out_h * out_w;
                for (int64_t oh = 0; oh < out_h; ++oh) {
                    const int64_t ih = oh * stride + kh - pad;
                    T* dst = row + oh * out_w;
                    if (ih < 0 || ih >= h) {
                        std::fill(dst, dst + out_w, T(0));
                        continue;
                    }
                    const T* src = in + (ci * h + ih) * w;
                    for (int64_t ow = 0; ow < out_w; ++ow) {
                        const int64_t iw = ow * stride + kw - pad;
                        dst[ow] = (iw >= 0 && iw < w) ? src[iw] : T(0);
                    }
                }
            }
        }
    }
}

// Scatters a column-matrix gradient back onto one sample's input.
template <typename T>
void col2im_accumulate(const T* col, int64_t channels, int64_t h, int64_t w, int64_t k,
                       int64_t stride, int64_t pad, int64_t out_h, int64_t out_w, T* grad_in) {
    for (int64_t ci = 0; ci < channels; ++ci) {
        for (int64_t kh = 0; kh < k; ++kh) {
            for (int64_t kw = 0; kw < k; ++kw) {
                const T* row = col + ((ci * k + kh) * k + kw) * out_h * out_w;
                for (int64_t oh = 0; oh < out_h; ++oh) {
                    const int64_t ih = oh * stride + kh - pad;
                    if (ih < 0 || ih >= h) continue;
                    T* dst = grad_in + (ci * h + ih) * w;
                    const T* src = row + oh * out_w;
                    for (int64_t ow = 0; ow < out_w; ++ow) {
                        const int64_t iw = ow * stride + kw - pad;
                        if (iw >= 0 && iw < w) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, float alpha, const float* a,
          int64_t lda, const float* b, int64_t ldb, float beta, float* c, int64_t ldc) {
    ensure_blas_single_threaded();
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb),
                beta, c, static_cast<int>(ldc));
}

// Direct convolution; per output element the terms accumulate in
// (in_ch, kh, kw) ascending order, which the naive reference shares.
template <typename T>
void conv_forward_direct(const Tensor<T>& input, const ConvLayer<T>& layer, Tensor<T>& out) {
    const int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int64_t cout = layer.out_channels(), k = layer.kernel();
    const int64_t stride = layer.stride, pad = layer.pad;
    const int64_t out_h = out.dim(2), out_w = out.dim(3);

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t co = 0; co < cout; ++co) {
            T* out_slab = out.data() + (n * cout + co) * out_h * out_w;
            std::fill(out_slab, out_slab + out_h * out_w, layer.bias[co]);
            for (int64_t ci = 0; ci < cin; ++ci) {
                const T* in_slab = input.data() + (n * cin + ci) * h * w;
                for (int64_t kh = 0; kh < k; ++kh) {
                    const int64_t oh_lo = std::max<int64_t>(0, ceil_div(pad - kh, stride));
                    const int64_t oh_hi = std::min(out_h, ceil_div(h + pad - kh, stride));
                    for (int64_t kw = 0; kw < k; ++kw) {
                        const T wv = layer.weights[((co * cin + ci) * k + kh) * k + kw];
                        const int64_t ow_lo = std::max<int64_t>(0, ceil_div(pad - kw, stride));
                        const int64_t ow_hi = std::min(out_w, ceil_div(w + pad - kw, stride));
                        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                            const T* in_row = in_slab + (oh * stride + kh - pad) * w + kw - pad;
                            T* out_row = out_slab + oh * out_w;
                            for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                                out_row[ow] += wv * in_row[ow * stride];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv_forward_gemm(const Tensor<float>& input, const ConvLayer<float>& layer,
                       Tensor<float>& out) {
    const int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int64_t cout = layer.out_channels(), k = layer.kernel();
    const int64_t out_h = out.dim(2), out_w = out.dim(3);
    const int64_t spatial = out_h * out_w;
    const bool pointwise = (k == 1 && layer.stride == 1 && layer.pad == 0);

    std::vector<float> col;
    if (!pointwise) col.resize(static_cast<size_t>(cin * k * k * spatial));
    for (int64_t n = 0; n < batch; ++n) {
        const float* in_slab = input.data() + n * cin * h * w;
        float* out_slab = out.data() + n * cout * spatial;
        const float* mat = in_slab;
        if (!pointwise) {
            im2col(in_slab, cin, h, w, k, layer.stride, layer.pad, out_h, out_w, col.data());
            mat = col.data();
        }
        gemm(false, false, cout, spatial, cin * k * k, 1.0f, layer.weights.data(), cin * k * k,
             mat, spatial, 0.0f, out_slab, spatial);
        for (int64_t co = 0; co < cout; ++co) {
            const float b = layer.bias[co];
            float* row = out_slab + co * spatial;
            for (int64_t p = 0; p < spatial; ++p) row[p] += b;
        }
    }
}

template <typename T>
void conv_backward_direct(const Tensor<T>& input, const ConvLayer<T>& layer,
                          const Tensor<T>& grad_out, ConvGrads<T>& grads) {
    const int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int64_t cout = layer.out_channels(), k = layer.kernel();
    const int64_t stride = layer.stride, pad = layer.pad;
    const int64_t out_h = grad_out.dim(2), out_w = grad_out.dim(3);

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t ci = 0; ci < cin; ++ci) {
            T* gi_slab = grads.input.data() + (n * cin + ci) * h * w;
            for (int64_t co = 0; co < cout; ++co) {
                const T* go_slab = grad_out.data() + (n * cout + co) * out_h * out_w;
                for (int64_t kh = 0; kh < k; ++kh) {
                    const int64_t oh_lo = std::max<int64_t>(0, ceil_div(pad - kh, stride));
                    const int64_t oh_hi = std::min(out_h, ceil_div(h + pad - kh, stride));
                    for (int64_t kw = 0; kw < k; ++kw) {
                        const T wv = layer.weights[((co * cin + ci) * k + kh) * k + kw];
                        const int64_t ow_lo = std::max<int64_t>(0, ceil_div(pad - kw, stride));
                        const int64_t ow_hi = std::min(out_w, ceil_div(w + pad - kw, stride));
                        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                            T* gi_row = gi_slab + (oh * stride + kh - pad) * w + kw - pad;
                            const T* go_row = go_slab + oh * out_w;
                            for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                                gi_row[ow * stride] += wv * go_row[ow];
                            }
                        }
                    }
                }
            }
        }
    }

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t co = 0; co < cout; ++co) {
        for (int64_t ci = 0; ci < cin; ++ci) {
            for (int64_t kh = 0; kh < k; ++kh) {
                const int64_t oh_lo = std::max<int64_t>(0, ceil_div(pad - kh, stride));
                const int64_t oh_hi = std::min(out_h, ceil_div(h + pad - kh, stride));
                for (int64_t kw = 0; kw < k; ++kw) {
                    const int64_t ow_lo = std::max<int64_t>(0, ceil_div(pad - kw, stride));
                    const int64_t ow_hi = std::min(out_w, ceil_div(w + pad - kw, stride));
                    T acc = T(0);
                    for (int64_t n = 0; n < batch; ++n) {
                        const T* go_slab = grad_out.data() + (n * cout + co) * out_h * out_w;
                        const T* in_slab = input.data() + (n * cin + ci) * h * w;
                        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                            const T* in_row = in_slab + (oh * stride + kh - pad) * w + kw - pad;
                            const T* go_row = go_slab + oh * out_w;
                            for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
                                acc += go_row[ow] * in_row[ow * stride];
                            }
                        }
                    }
                    grads.weights[((co * cin + ci) * k + kh) * k + kw] = acc;
                }
            }
        }
    }
}

void conv_backward_gemm(const Tensor<float>& input, const ConvLayer<float>& layer,
                        const Tensor<float>& grad_out, ConvGrads<float>& grads) {
    const int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int64_t cout = layer.out_channels(), k = layer.kernel();
    const int64_t out_h = grad_out.dim(2), out_w = grad_out.dim(3);
    const int64_t spatial = out_h * out_w;
    const int64_t ckk = cin * k * k;
    const bool pointwise = (k == 1 && layer.stride == 1 && layer.pad == 0);

    std::vector<float> col(pointwise ? 0 : static_cast<size_t>(ckk * spatial));
    std::vector<float> col_grad(pointwise ? 0 : static_cast<size_t>(ckk * spatial));
    // Samples accumulate into grad_weights in index order.
    for (int64_t n = 0; n < batch; ++n) {
        const float* in_slab = input.data() + n * cin * h * w;
        const float* go_slab = grad_out.data() + n * cout * spatial;
        const float* mat = in_slab;
        if (!pointwise) {
            im2col(in_slab, cin, h, w, k, layer.stride, layer.pad, out_h, out_w, col.data());
            mat = col.data();
        }
        gemm(false, true, cout, ckk, spatial, 1.0f, go_slab, spatial, mat, spatial, 1.0f,
             grads.weights.data(), ckk);
        float* gi_mat = pointwise ? grads.input.data() + n * cin * h * w : col_grad.data();
        const float beta = pointwise ? 1.0f : 0.0f;
        gemm(true, false, ckk, spatial, cout, 1.0f, layer.weights.data(), ckk, go_slab, spatial,
             beta, gi_mat, spatial);
        if (!pointwise) {
            col2im_accumulate(col_grad.data(), cin, h, w, k, layer.stride, layer.pad, out_h, out_w,
                              grads.input.data() + n * cin * h * w);
        }
    }
}

}  // namespace

int64_t conv_output_size(int64_t in, int64_t kernel, int64_t stride, int64_t pad) {
    const int64_t num = in + 2 * pad - kernel;
    if (num < 0 || num % stride != 0) {
        throw std::invalid_argument("conv2d: spatial size " + std::to_string(in) + " with kernel " +
                                    std::to_string(kernel) + ", stride " + std::to_string(stride) +
                                    ", pad " + std::to_string(pad) +
                                    " does not yield an integral output size");
    }
    return num / stride + 1;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer) {
    validate_conv_args(input, layer);
    const int64_t out_h = conv_output_size(input.dim(2), layer.kernel(), layer.stride, layer.pad);
    const int64_t out_w = conv_output_size(input.dim(3), layer.kernel(), layer.stride, layer.pad);
    Tensor<T> out({input.dim(0), layer.out_channels(), out_h, out_w});
    if constexpr (std::is_same_v<T, float>) {
        conv_forward_gemm(input, layer, out);
    } else {
        conv_forward_direct(input, layer, out);
    }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                             const Tensor<T>& grad_out) {
    validate_conv_args(input, layer);
    const int64_t out_h = conv_output_size(input.dim(2), layer.kernel(), layer.stride, layer.pad);
    const int64_t out_w = conv_output_size(input.dim(3), layer.kernel(), layer.stride, layer.pad);
    const std::vector<int64_t> expect{input.dim(0), layer.out_channels(), out_h, out_w};
    if (grad_out.shape() != expect) {
        throw std::invalid_argument("conv2d_backward: grad_out " + grad_out.shape_str() +
                                    " does not match output shape " + Tensor<T>::shape_str(expect));
    }

    ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(layer.weights.shape()),
                       Tensor<T>(layer.bias.shape())};
    if constexpr (std::is_same_v<T, float>) {
        conv_backward_gemm(input, layer, grad_out, grads);
    } else {
        conv_backward_direct(input, layer, grad_out, grads);
    }

    const int64_t cout = layer.out_channels();
    const int64_t batch = input.dim(0);
#pragma omp parallel for schedule(static)
    for (int64_t co = 0; co < cout; ++co) {
        T acc = T(0);
        for (int64_t n = 0; n < batch; ++n) {
            const T* go_row = grad_out.data() + (n * cout + co) * out_h * out_w;
            for (int64_t p = 0; p < out_h * out_w; ++p) acc += go_row[p];
        }
        grads.bias[co] = acc;
    }
    return grads;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    const int64_t n = input.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
    require_same_shape(input, grad_out, "relu_backward");
    Tensor<T> out(input.shape());
    const int64_t n = input.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) out[i] = input[i] > T(0) ? grad_out[i] : T(0);
    return out;
}

template <typename T>
MaxPoolResult<T> maxpool2(const Tensor<T>& input) {
    if (input.rank() != 4) {
        throw std::invalid_argument("maxpool2: input must be [N,C,H,W], got " + input.shape_str());
    }
    const int64_t batch = input.dim(0), ch = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw std::invalid_argument("maxpool2: spatial size must be even, got " +
                                    input.shape_str());
    }
    MaxPoolResult<T> res{Tensor<T>({batch, ch, h / 2, w / 2}),
                         std::vector<int64_t>(static_cast<size_t>(batch * ch * (h / 2) * (w / 2)))};
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t c = 0; c < ch; ++c) {
            const T* in_slab = input.data() + (n * ch + c) * h * w;
            const int64_t base = (n * ch + c) * (h / 2) * (w / 2);
            for (int64_t oh = 0; oh < h / 2; ++oh) {
                for (int64_t ow = 0; ow < w / 2; ++ow) {
                    int64_t best_idx = (2 * oh) * w + 2 * ow;
                    T best = in_slab[best_idx];
                    for (int64_t dh = 0; dh < 2; ++dh) {
                        for (int64_t dw = 0; dw < 2; ++dw) {
                            const int64_t idx = (2 * oh + dh) * w + 2 * ow + dw;
                            if (in_slab[idx] > best) {
                                best = in_slab[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    res.output[base + oh * (w / 2) + ow] = best;
                    res.argmax[static_cast<size_t>(base + oh * (w / 2) + ow)] =
                        (n * ch + c) * h * w + best_idx;
                }
            }
        }
    }
    return res;
}

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int64_t>& argmax,
                            const std::vector<int64_t>& input_shape, const Tensor<T>& grad_out) {
    if (static_cast<int64_t>(argmax.size()) != grad_out.numel()) {
        throw std::invalid_argument("maxpool2_backward: argmax record size " +
                                    std::to_string(argmax.size()) + " does not match grad_out " +
                                    grad_out.shape_str());
    }
    Tensor<T> grad_in(input_shape);
    const int64_t n = grad_out.numel();
    // Windows do not overlap, so the argmax targets are distinct.
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) grad_in[argmax[static_cast<size_t>(i)]] += grad_out[i];
    return grad_in;
}

template <typename T>
Tensor<T> gap(const Tensor<T>& input) {
    if (input.rank() != 4) {
        throw std::invalid_argument("gap: input must be [N,C,H,W], got " + input.shape_str());
    }
    const int64_t batch = input.dim(0), ch = input.dim(1), spatial = input.dim(2) * input.dim(3);
    Tensor<T> out({batch, ch});
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t c = 0; c < ch; ++c) {
            const T* slab = input.data() + (n * ch + c) * spatial;
            T acc = T(0);
            for (int64_t p = 0; p < spatial; ++p) acc += slab[p];
            out.at2(n, c) = acc / static_cast<T>(spatial);
        }
    }
    return out;
}

template <typename T>
Tensor<T> gap_backward(const Tensor<T>& grad_out, int64_t h, int64_t w) {
    if (grad_out.rank() != 2) {
        throw std::invalid_argument("gap_backward: grad must be [N,C], got " +
                                    grad_out.shape_str());
    }
    const int64_t batch = grad_out.dim(0), ch = grad_out.dim(1);
    Tensor<T> grad_in({batch, ch, h, w});
    const T scale = T(1) / static_cast<T>(h * w);
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t c = 0; c < ch; ++c) {
            T* slab = grad_in.data() + (n * ch + c) * h * w;
            const T g = grad_out.at2(n, c) * scale;
            std::fill(slab, slab + h * w, g);
        }
    }
    return grad_in;
}

template <typename T>
SoftmaxCeResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int64_t> labels) {
    if (logits.rank() != 2) {
        throw std::invalid_argument("softmax_cross_entropy: logits must be [N,C], got " +
                                    logits.shape_str());
    }
    const int64_t batch = logits.dim(0), classes = logits.dim(1);
    if (static_cast<int64_t>(labels.size()) != batch) {
        throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                    " labels for batch of " + std::to_string(batch));
    }
    for (int64_t n = 0; n < batch; ++n) {
        if (labels[static_cast<size_t>(n)] < 0 || labels[static_cast<size_t>(n)] >= classes) {
            throw std::invalid_argument("softmax_cross_entropy: label " +
                                        std::to_string(labels[static_cast<size_t>(n)]) +
                                        " out of range [0," + std::to_string(classes) + ")");
        }
    }

    SoftmaxCeResult<T> res;
    res.grad_logits = Tensor<T>({batch, classes});
    T loss_sum = T(0);
    for (int64_t n = 0; n < batch; ++n) {
        const T* row = logits.data() + n * classes;
        T* grow = res.grad_logits.data() + n * classes;
        T m = row[0];
        for (int64_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
        T sum = T(0);
        for (int64_t c = 0; c < classes; ++c) {
            grow[c] = std::exp(row[c] - m);
            sum += grow[c];
        }
        const int64_t y = labels[static_cast<size_t>(n)];
        loss_sum += std::log(sum) - (row[y] - m);
        const T inv = T(1) / sum;
        for (int64_t c = 0; c < classes; ++c) grow[c] *= inv / static_cast<T>(batch);
        grow[y] -= T(1) / static_cast<T>(batch);
    }
    res.loss = loss_sum / static_cast<T>(batch);
    return res;
}

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& map, int64_t out_h, int64_t out_w) {
    if (map.rank() != 2) {
        throw std::invalid_argument("bilinear_resize: map must be 2-D, got " + map.shape_str());
    }
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("bilinear_resize: target size " + std::to_string(out_h) + "x" +
                                    std::to_string(out_w) + " must be positive");
    }
    const int64_t h = map.dim(0), w = map.dim(1);
    Tensor<T> out({out_h, out_w});
    for (int64_t i = 0; i < out_h; ++i) {
        double sy = (static_cast<double>(i) + 0.5) * static_cast<double>(h) /
                        static_cast<double>(out_h) -
                    0.5;
        sy = std::min(std::max(sy, 0.0), static_cast<double>(h - 1));
        const int64_t y0 = static_cast<int64_t>(sy);
        const int64_t y1 = std::min(y0 + 1, h - 1);
        const T wy = static_cast<T>(sy - static_cast<double>(y0));
        for (int64_t j = 0; j < out_w; ++j) {
            double sx = (static_cast<double>(j) + 0.5) * static_cast<double>(w) /
                            static_cast<double>(out_w) -
                        0.5;
            sx = std::min(std::max(sx, 0.0), static_cast<double>(w - 1));
            const int64_t x0 = static_cast<int64_t>(sx);
            const int64_t x1 = std::min(x0 + 1, w - 1);
            const T wx = static_cast<T>(sx - static_cast<double>(x0));
            const T top = map.at2(y0, x0) * (T(1) - wx) + map.at2(y0, x1) * wx;
            const T bot = map.at2(y1, x0) * (T(1) - wx) + map.at2(y1, x1) * wx;
            out.at2(i, j) = top * (T(1) - wy) + bot * wy;
        }
    }
    return out;
}

template <typename T>
void sgd_update(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& velocity, T lr, T momentum,
                T weight_decay) {
    require_same_shape(param, grad, "sgd_update");
    require_same_shape(param, velocity, "sgd_update");
    const int64_t n = param.numel();
    for (int64_t i = 0; i < n; ++i) {
        velocity[i] = momentum * velocity[i] + grad[i] + weight_decay * param[i];
        param[i] -= lr * velocity[i];
    }
}

#define ACOL_INSTANTIATE_OPS(T)                                                                  \
    template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const ConvLayer<T>&);                 \
    template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const ConvLayer<T>&,              \
                                             const Tensor<T>&);                                  \
    template Tensor<T> relu<T>(const Tensor<T>&);                                                \
    template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                     \
    template MaxPoolResult<T> maxpool2<T>(const Tensor<T>&);                                     \
    template Tensor<T> maxpool2_backward<T>(const std::vector<int64_t>&,                         \
                                            const std::vector<int64_t>&, const Tensor<T>&);     \
    template Tensor<T> gap<T>(const Tensor<T>&);                                                 \
    template Tensor<T> gap_backward<T>(const Tensor<T>&, int64_t, int64_t);                      \
    template SoftmaxCeResult<T> softmax_cross_entropy<T>(const Tensor<T>&,                       \
                                                         std::span<const int64_t>);              \
    template Tensor<T> bilinear_resize<T>(const Tensor<T>&, int64_t, int64_t);                   \
    template void sgd_update<T>(Tensor<T>&, const Tensor<T>&, Tensor<T>&, T, T, T);

ACOL_INSTANTIATE_OPS(float)
ACOL_INSTANTIATE_OPS(double)

#undef ACOL_INSTANTIATE_OPS

}  // namespace acol
