#include "lpq/gemm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "lpq/error.hpp"

namespace lpq {

namespace {

void check_inner(std::size_t weight_cols, std::size_t activation_rows) {
  if (weight_cols != activation_rows) {
    throw Error(ErrorKind::ShapeError, "inner dimensions differ: weights have " + std::to_string(weight_cols) +
                                           " columns, activations " + std::to_string(activation_rows) + " rows");
  }
}

// Runs body(first_row, last_row) over contiguous row ranges.
void parallel_rows(std::size_t rows, unsigned threads,
                   const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(rows, 1));
  if (workers <= 1) {
    body(0, rows);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (rows + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(rows, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
}

// acc[m] += sum_k w[k] * x[k, m] for k in [k0, k1), ascending k.
void accumulate_block(std::span<const float> w, const Matrix<float>& x, std::size_t k0, std::size_t k1,
                      std::span<float> acc) {
  const std::size_t m_count = x.cols();
  for (std::size_t k = k0; k < k1; ++k) {
    const float wk = w[k];
    const float* xk = x.row(k).data();
    for (std::size_t m = 0; m < m_count; ++m) acc[m] += wk * xk[m];
  }
}

}  // namespace

Matrix<float> gemm_quantized(const QuantizedTensor& weights, const Matrix<float>& activations,
                             const GemmOptions& options) {
  weights.validate();
  check_inner(weights.cols, activations.rows());

  const std::size_t n_rows = weights.rows;
  const std::size_t k_count = weights.cols;
  const std::size_t m_count = activations.cols();
  const std::size_t width = weights.effective_block_size();
  const std::size_t per_row = weights.blocks_per_row();
  const bool minifloat = is_minifloat(weights.scheme.format);
  const bool shifted = options.path == DequantPath::bias_shift;

  if (!minifloat && shifted) {
    throw Error(ErrorKind::PathUnavailable, "bias-shift path applies to minifloat formats only");
  }
  if (shifted && !weights.bias_shift) {
    throw Error(ErrorKind::PathUnavailable, "tensor was quantized without folded scales");
  }

  // Per-code raw weight as binary32: codebook value, composed bias-shift
  // value, or INT4 level.
  std::vector<float> lut;
  if (minifloat) {
    const MiniFloatFormat& format = minifloat_of(weights.scheme.format);
    for (const CodebookEntry& e : codebook(format)) {
      lut.push_back(shifted ? compose_shifted(format, e.code).to_float() : static_cast<float>(e.value));
    }
  } else {
    for (unsigned level = 0; level <= kInt4MaxLevel; ++level) lut.push_back(static_cast<float>(level));
  }

  // Per-block column sums of X for the INT4 zero-point term.
  Matrix<float> block_sums;
  if (!minifloat) {
    block_sums = Matrix<float>(per_row, m_count, 0.0f);
    for (std::size_t b = 0; b < per_row; ++b) {
      const std::size_t k1 = std::min(k_count, (b + 1) * width);
      for (std::size_t k = b * width; k < k1; ++k) {
        for (std::size_t m = 0; m < m_count; ++m) block_sums(b, m) += activations(k, m);
      }
    }
  }

  Matrix<float> out(n_rows, m_count, 0.0f);
  parallel_rows(n_rows, options.threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<float> w(k_count);
    std::vector<float> partial(m_count);
    for (std::size_t r = lo; r < hi; ++r) {
      if (minifloat) {
        const MiniFloatFormat& format = minifloat_of(weights.scheme.format);
        const auto& segments = std::get<PackedSegments>(weights.payload);
        for (std::size_t k = 0; k < k_count; ++k) w[k] = lut[code_at(format, segments, r * k_count + k).bits];
      } else {
        const auto& nibbles = std::get<NibbleArray>(weights.payload);
        for (std::size_t k = 0; k < k_count; ++k) w[k] = lut[level_at(nibbles, r * k_count + k)];
      }

      std::span<float> acc = out.row(r);
      for (std::size_t b = 0; b < per_row; ++b) {
        const std::size_t index = r * per_row + b;
        const BlockParams& params = weights.block_params[index];
        const float scale = shifted ? weights.folded_scales[index].to_float() : params.scale.to_float();
        std::fill(partial.begin(), partial.end(), 0.0f);
        accumulate_block(w, activations, b * width, std::min(k_count, (b + 1) * width), partial);
        if (minifloat) {
          for (std::size_t m = 0; m < m_count; ++m) acc[m] += scale * partial[m];
        } else {
          const float zero = params.zero_point->to_float();
          for (std::size_t m = 0; m < m_count; ++m) acc[m] += scale * partial[m] + zero * block_sums(b, m);
        }
      }
    }
  });
  return out;
}

Matrix<double> gemm_reference(const Matrix<double>& weights, const Matrix<double>& activations) {
  check_inner(weights.cols(), activations.rows());
  Matrix<double> out(weights.rows(), activations.cols(), 0.0);
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    for (std::size_t m = 0; m < activations.cols(); ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < weights.cols(); ++k) acc += weights(r, k) * activations(k, m);
      out(r, m) = acc;
    }
  }
  return out;
}

Matrix<float> gemm_dense_half(const Matrix<Half>& weights, const Matrix<float>& activations,
                              unsigned threads) {
  check_inner(weights.cols(), activations.rows());
  const std::size_t k_count = weights.cols();
  Matrix<float> out(weights.rows(), activations.cols(), 0.0f);
  parallel_rows(weights.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<float> w(k_count);
    for (std::size_t r = lo; r < hi; ++r) {
      for (std::size_t k = 0; k < k_count; ++k) w[k] = weights(r, k).to_float();
      accumulate_block(w, activations, 0, k_count, out.row(r));
    }
  });
  return out;
}

ErrorReport compare_outputs(const Matrix<float>& output, const Matrix<double>& reference) {
  return error_report(reference, output);
}

double gemm_tolerance(std::size_t inner, double max_abs_weight, double max_abs_activation) noexcept {
  return 4.0 * std::numeric_limits<float>::epsilon() * static_cast<double>(inner) * max_abs_weight *
         max_abs_activation;
}

}  // namespace lpq
