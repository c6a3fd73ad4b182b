#include "acol/ref_ops.hpp"

#include <algorithm>

namespace acol::ref {

template <typename T>
Tensor<T> conv2d_forward_naive(const Tensor<T>& input, const ConvLayer<T>& layer) {
    const int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int64_t cout = layer.out_channels(), k = layer.kernel();
    const int64_t out_h = conv_output_size(h, k, layer.stride, layer.pad);
    const int64_t out_w = conv_output_size(w, k, layer.stride, layer.pad);
    Tensor<T> out({batch, cout, out_h, out_w});
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t co = 0; co < cout; ++co) {
            for (int64_t oh = 0; oh < out_h; ++oh) {
                for (int64_t ow = 0; ow < out_w; ++ow) {
                    T acc = layer.bias[co];
                    for (int64_t ci = 0; ci < cin; ++ci) {
                        for (int64_t kh = 0; kh < k; ++kh) {
                            for (int64_t kw = 0; kw < k; ++kw) {
                                const int64_t ih = oh * layer.stride + kh - layer.pad;
                                const int64_t iw = ow * layer.stride + kw - layer.pad;
                                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                                acc += layer.weights[((co * cin + ci) * k + kh) * k + kw] *
                                       input[((n * cin + ci) * h + ih) * w + iw];
                            }
                        }
                    }
                    out[((n * cout + co) * out_h + oh) * out_w + ow] = acc;
                }
            }
        }
    }
    return out;
}

template <typename T>
Tensor<T> relu_serial(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    for (int64_t i = 0; i < input.numel(); ++i) out[i] = std::max(input[i], T(0));
    return out;
}

template <typename T>
MaxPoolResult<T> maxpool2_serial(const Tensor<T>& input) {
    const int64_t batch = input.dim(0), ch = input.dim(1), h = input.dim(2), w = input.dim(3);
    MaxPoolResult<T> res{Tensor<T>({batch, ch, h / 2, w / 2}),
                         std::vector<int64_t>(static_cast<size_t>(batch * ch * (h / 2) * (w / 2)))};
    int64_t o = 0;
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t c = 0; c < ch; ++c) {
            for (int64_t oh = 0; oh < h / 2; ++oh) {
                for (int64_t ow = 0; ow < w / 2; ++ow, ++o) {
                    int64_t best_idx = ((n * ch + c) * h + 2 * oh) * w + 2 * ow;
                    T best = input[best_idx];
                    for (int64_t dh = 0; dh < 2; ++dh) {
                        for (int64_t dw = 0; dw < 2; ++dw) {
                            const int64_t idx = ((n * ch + c) * h + 2 * oh + dh) * w + 2 * ow + dw;
                            if (input[idx] > best) {
                                best = input[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    res.output[o] = best;
                    res.argmax[static_cast<size_t>(o)] = best_idx;
                }
            }
        }
    }
    return res;
}

template <typename T>
Tensor<T> gap_serial(const Tensor<T>& input) {
    const int64_t batch = input.dim(0), ch = input.dim(1), spatial = input.dim(2) * input.dim(3);
    Tensor<T> out({batch, ch});
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t c = 0; c < ch; ++c) {
            T acc = T(0);
            const T* slab = input.data() + (n * ch + c) * spatial;
            for (int64_t p = 0; p < spatial; ++p) acc += slab[p];
            out.at2(n, c) = acc / static_cast<T>(spatial);
        }
    }
    return out;
}

#define ACOL_INSTANTIATE_REF(T)                                                   \
    template Tensor<T> conv2d_forward_naive<T>(const Tensor<T>&, const ConvLayer<T>&); \
    template Tensor<T> relu_serial<T>(const Tensor<T>&);                          \
    template MaxPoolResult<T> maxpool2_serial<T>(const Tensor<T>&);               \
    template Tensor<T> gap_serial<T>(const Tensor<T>&);

ACOL_INSTANTIATE_REF(float)
ACOL_INSTANTIATE_REF(double)

#undef ACOL_INSTANTIATE_REF

}  // namespace acol::ref
