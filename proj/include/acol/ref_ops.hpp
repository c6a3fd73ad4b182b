#pragma once

#include "acol/ops.hpp"
#include "acol/tensor.hpp"

namespace acol::ref {

// Serial reference kernels. These stay deliberately naive: the tests compare
// the production kernels against them, and the benchmark reports the speedup.

/// Six-nested-loop convolution; accumulates (in_ch, kh, kw) ascending per
/// output element and skips padded positions.
template <typename T>
Tensor<T> conv2d_forward_naive(const Tensor<T>& input, const ConvLayer<T>& layer);

template <typename T>
Tensor<T> relu_serial(const Tensor<T>& input);

template <typename T>
MaxPoolResult<T> maxpool2_serial(const Tensor<T>& input);

template <typename T>
Tensor<T> gap_serial(const Tensor<T>& input);

}  // namespace acol::ref
