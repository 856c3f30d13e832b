#pragma once

#include <cstddef>

#include "lpq/dequant.hpp"
#include "lpq/half.hpp"
#include "lpq/matrix.hpp"
#include "lpq/quantizer.hpp"

namespace lpq {

struct GemmOptions {
  DequantPath path = DequantPath::naive;
  unsigned threads = 1;
};

/// Y = W_hat * X with W_hat dequantized on the fly, binary32 accumulation.
///
/// Per output element the k loop runs in ascending order. Each block's raw
/// partial dot product (codebook values, or composed bias-shift values on
/// that path) is accumulated first; FGQ multiplies every block partial by
/// its scale before adding it to the row sum, CGQ scales once after the
/// whole row. INT4 blocks contribute S * sum(q x) + zero * sum(x).
///
/// Rows are distributed over `threads`; results do not depend on it.
Matrix<float> gemm_quantized(const QuantizedTensor& weights, const Matrix<float>& activations,
                             const GemmOptions& options = {});

/// Double-precision oracle with the same ascending-k order.
Matrix<double> gemm_reference(const Matrix<double>& weights, const Matrix<double>& activations);

/// Dense binary16 weights times binary32 activations, binary32 accumulation.
Matrix<float> gemm_dense_half(const Matrix<Half>& weights, const Matrix<float>& activations,
                              unsigned threads = 1);

ErrorReport compare_outputs(const Matrix<float>& output, const Matrix<double>& reference);

/// Element-wise bound 4 * eps32 * K * max|W_hat| * max|X| between the binary32
/// kernel and the double oracle.
double gemm_tolerance(std::size_t inner, double max_abs_weight, double max_abs_activation) noexcept;

}  // namespace lpq
