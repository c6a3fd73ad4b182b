#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "acol/tensor.hpp"

namespace acol {

/// One convolution layer: weights [out_ch, in_ch, kh, kw] plus bias [out_ch].
template <typename T>
struct ConvLayer {
    Tensor<T> weights;
    Tensor<T> bias;
    int64_t stride = 1;
    int64_t pad = 0;

    int64_t out_channels() const { return weights.dim(0); }
    int64_t in_channels() const { return weights.dim(1); }
    int64_t kernel() const { return weights.dim(2); }
};

template <typename T>
struct ConvGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

template <typename T>
struct MaxPoolResult {
    Tensor<T> output;
    std::vector<int64_t> argmax;  // flat input index per output element
};

template <typename T>
struct SoftmaxCeResult {
    T loss = T(0);                 // mean over the batch
    Tensor<T> grad_logits;         // (softmax - onehot) / N
};

/// Output spatial size for one axis; throws if the arithmetic does not yield
/// a positive integer.
int64_t conv_output_size(int64_t in, int64_t kernel, int64_t stride, int64_t pad);

// Convolution. The float instantiation runs im2col + single-threaded BLAS
// sgemm; the double instantiation runs direct loops whose per-element
// accumulation order (in_ch, kh, kw ascending) matches the naive reference
// bit for bit.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                             const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

/// Passes gradient where input > 0; an input of exactly 0 passes zero.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out);

/// 2x2 non-overlapping max pool; H and W must be even. Ties resolve to the
/// first maximum in scan order (row-major within the window).
template <typename T>
MaxPoolResult<T> maxpool2(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int64_t>& argmax,
                            const std::vector<int64_t>& input_shape,
                            const Tensor<T>& grad_out);

/// Global average pool: [N,C,H,W] -> [N,C].
template <typename T>
Tensor<T> gap(const Tensor<T>& input);

template <typename T>
Tensor<T> gap_backward(const Tensor<T>& grad_out, int64_t h, int64_t w);

/// Mean cross entropy with max-subtracted softmax.
template <typename T>
SoftmaxCeResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int64_t> labels);

/// Half-pixel-center bilinear resize of a 2-D map, borders clamped.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& map, int64_t out_h, int64_t out_w);

/// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
template <typename T>
void sgd_update(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& velocity,
                T lr, T momentum, T weight_decay);

}  // namespace acol
