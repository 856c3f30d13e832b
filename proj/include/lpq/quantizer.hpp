#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "lpq/dequant.hpp"
#include "lpq/half.hpp"
#include "lpq/matrix.hpp"
#include "lpq/packing.hpp"
#include "lpq/scalar_codec.hpp"

namespace lpq {

enum class NumericFormat : std::uint8_t { fp6_e3m2 = 0, fp5_e3m1 = 1, int4_asym = 2 };
enum class Granularity : std::uint8_t { cgq = 0, fgq = 1 };

inline constexpr std::size_t kDefaultBlockSize = 256;
inline constexpr unsigned kInt4MaxLevel = 15;

constexpr bool is_minifloat(NumericFormat f) noexcept { return f != NumericFormat::int4_asym; }
/// Minifloat layout of `f`; throws InvalidScheme for INT4.
const MiniFloatFormat& minifloat_of(NumericFormat f);

/// Granularity plus numeric format. For CGQ the block is a full row and
/// `block_size` is ignored (stored as 0).
struct QuantScheme {
  Granularity granularity = Granularity::cgq;
  std::size_t block_size = 0;
  NumericFormat format = NumericFormat::fp6_e3m2;

  friend bool operator==(const QuantScheme&, const QuantScheme&) = default;
};

struct BlockDescriptor {
  std::size_t row;
  std::size_t col_start;
  std::size_t col_end;

  std::size_t width() const noexcept { return col_end - col_start; }
  friend bool operator==(const BlockDescriptor&, const BlockDescriptor&) = default;
};

struct BlockParams {
  Half scale = kHalfOne;
  std::optional<Half> zero_point;  // INT4 only

  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

using Payload = std::variant<PackedSegments, NibbleArray>;

/// Immutable result of quantize_tensor. Codes are stored for all rows*cols
/// elements in row-major order; block parameters in row-major block order.
struct QuantizedTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  QuantScheme scheme;
  std::vector<BlockParams> block_params;
  Payload payload;
  bool bias_shift = false;
  std::vector<Half> folded_scales;  // non-empty iff bias_shift

  std::size_t effective_block_size() const noexcept;
  std::size_t blocks_per_row() const noexcept;
  std::size_t block_count() const noexcept { return rows * blocks_per_row(); }

  /// Throws PayloadMismatch for payload size problems and
  /// InvariantViolation for anything else that is inconsistent.
  void validate() const;

  friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;
};

struct ErrorReport {
  double mse = 0.0;
  double max_abs_error = 0.0;
  double sqnr_db = 0.0;  // +inf for exact reconstruction
};

/// Throws InvalidScheme when an FGQ block size is zero.
void check_scheme(const QuantScheme& scheme);

std::vector<BlockDescriptor> partition_blocks(std::size_t rows, std::size_t cols,
                                              const QuantScheme& scheme);

/// S = max|w| / max_value rounded to binary16; all-zero blocks get S = 1.
BlockParams compute_scale_fp(std::span<const double> block, const MiniFloatFormat& format);

/// zero point = min(w), S = (max - min) / 15, both rounded to binary16.
/// Constant blocks get S = 1.
BlockParams compute_affine_params_int4(std::span<const double> block);

QuantizedTensor quantize_tensor(const Matrix<double>& weights, const QuantScheme& scheme);
QuantizedTensor quantize_tensor(const Matrix<float>& weights, const QuantScheme& scheme);

/// Copy of `q` with folded scales attached. Minifloat formats only; throws
/// ScaleOverflow if any block scale cannot be folded.
QuantizedTensor enable_bias_shift(QuantizedTensor q);

/// Exact real-valued inverse of the per-block map (S*v, or S*q + zero point).
Matrix<double> dequantize_tensor(const QuantizedTensor& q);

/// binary16 reconstruction through one of the scalar dequant paths. The
/// bias-shift path requires folded scales (PathUnavailable otherwise).
Matrix<double> dequantize_tensor(const QuantizedTensor& q, DequantPath path);

ErrorReport error_report(std::span<const double> reference, std::span<const double> approx);

template <class A, class B>
ErrorReport error_report(const Matrix<A>& reference, const Matrix<B>& approx) {
  if (reference.rows() != approx.rows() || reference.cols() != approx.cols()) {
    throw Error(ErrorKind::ShapeError, "error_report: shape mismatch");
  }
  const Matrix<double> r = matrix_cast<double>(reference);
  const Matrix<double> a = matrix_cast<double>(approx);
  return error_report(r.values(), a.values());
}

}  // namespace lpq
