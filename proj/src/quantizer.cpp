#include "lpq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lpq/error.hpp"

namespace lpq {

namespace {

// Round a positive scale to binary16. Underflow clamps to the smallest
// subnormal so the scale stays > 0; overflow is an input error.
Half to_half_scale(double s) {
  Half h = Half::from_double(s);
  if (!h.is_finite()) {
    throw Error(ErrorKind::InvalidInput, "block scale " + std::to_string(s) + " overflows binary16");
  }
  if (h.is_zero()) h = kHalfMinSubnormal;
  return h;
}

Half to_half_checked(double v, const char* what) {
  const Half h = Half::from_double(v);
  if (!h.is_finite()) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + " " + std::to_string(v) + " overflows binary16");
  }
  return h;
}

void check_finite(std::span<const double> block) {
  for (double v : block) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "block contains a non-finite value");
  }
}

void check_nonempty(std::span<const double> block) {
  if (block.empty()) throw Error(ErrorKind::InvalidInput, "empty block");
}


template <class T>
QuantizedTensor quantize_impl(const Matrix<T>& weights, const QuantScheme& requested) {
  check_scheme(requested);
  QuantScheme scheme = requested;
  if (scheme.granularity == Granularity::cgq) scheme.block_size = 0;

  QuantizedTensor q;
  q.rows = weights.rows();
  q.cols = weights.cols();
  q.scheme = scheme;

  const std::size_t n = weights.size();
  const bool minifloat = is_minifloat(scheme.format);
  std::vector<Code> codes;
  std::vector<std::uint8_t> levels;
  if (minifloat) {
    codes.resize(n);
  } else {
    levels.resize(n);
  }

  const std::vector<BlockDescriptor> blocks =
      n == 0 ? std::vector<BlockDescriptor>{} : partition_blocks(q.rows, q.cols, scheme);
  q.block_params.reserve(blocks.size());
  std::vector<double> buffer;
  for (const BlockDescriptor& b : blocks) {
    const auto row = weights.row(b.row);
    buffer.assign(row.begin() + static_cast<std::ptrdiff_t>(b.col_start),
                  row.begin() + static_cast<std::ptrdiff_t>(b.col_end));
    const std::size_t base = b.row * q.cols + b.col_start;
    if (minifloat) {
      const MiniFloatFormat& format = minifloat_of(scheme.format);
      const BlockParams params = compute_scale_fp(buffer, format);
      const double s = params.scale.to_double();
      for (std::size_t i = 0; i < buffer.size(); ++i) codes[base + i] = encode_rtn(format, buffer[i] / s);
      q.block_params.push_back(params);
    } else {
      const BlockParams params = compute_affine_params_int4(buffer);
      const double s = params.scale.to_double();
      const double zero = params.zero_point->to_double();
      for (std::size_t i = 0; i < buffer.size(); ++i) {
        const double level = std::nearbyint((buffer[i] - zero) / s);
        levels[base + i] = static_cast<std::uint8_t>(std::clamp(level, 0.0, double{kInt4MaxLevel}));
      }
      q.block_params.push_back(params);
    }
  }

  if (minifloat) {
    q.payload = pack(minifloat_of(scheme.format), codes);
  } else {
    q.payload = pack_int4(levels);
  }
  return q;
}

}  // namespace

const MiniFloatFormat& minifloat_of(NumericFormat f) {
  switch (f) {
    case NumericFormat::fp6_e3m2: return kFp6E3M2;
    case NumericFormat::fp5_e3m1: return kFp5E3M1;
    case NumericFormat::int4_asym: break;
  }
  throw Error(ErrorKind::InvalidScheme, "INT4 is not a minifloat format");
}

std::size_t QuantizedTensor::effective_block_size() const noexcept {
  return scheme.granularity == Granularity::cgq ? cols : scheme.block_size;
}

std::size_t QuantizedTensor::blocks_per_row() const noexcept {
  const std::size_t width = effective_block_size();
  if (cols == 0 || width == 0) return 0;
  return (cols + width - 1) / width;
}

void QuantizedTensor::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvariantViolation, what); };

  if (scheme.granularity == Granularity::fgq && scheme.block_size == 0) fail("FGQ block size is zero");
  if (scheme.granularity == Granularity::cgq && scheme.block_size != 0) fail("CGQ block size must be 0");
  if (cols != 0 && rows > std::numeric_limits<std::size_t>::max() / cols) fail("rows * cols overflows");
  if (block_params.size() != block_count()) {
    fail("expected " + std::to_string(block_count()) + " block parameters, found " +
         std::to_string(block_params.size()));
  }

  const bool minifloat = is_minifloat(scheme.format);
  for (const BlockParams& p : block_params) {
    if (!p.scale.is_finite() || p.scale.sign() || p.scale.is_zero()) fail("block scale must be positive and finite");
    if (p.zero_point.has_value() != !minifloat) fail("zero point presence does not match format");
    if (p.zero_point && !p.zero_point->is_finite()) fail("zero point must be finite");
  }

  const std::size_t n = rows * cols;
  if (minifloat) {
    const auto* segments = std::get_if<PackedSegments>(&payload);
    if (segments == nullptr) fail("minifloat tensor carries a nibble payload");
    if (segments->code_count != n) {
      throw Error(ErrorKind::PayloadMismatch, "payload holds " + std::to_string(segments->code_count) +
                                                  " codes, tensor has " + std::to_string(n));
    }
    check_segments(minifloat_of(scheme.format), *segments);
  } else {
    const auto* nibbles = std::get_if<NibbleArray>(&payload);
    if (nibbles == nullptr) fail("INT4 tensor carries a segmented payload");
    if (nibbles->count != n || nibbles->bytes.size() != int4_bytes(n)) {
      throw Error(ErrorKind::PayloadMismatch, "nibble payload does not hold " + std::to_string(n) + " levels");
    }
  }

  if (bias_shift) {
    if (!minifloat) fail("bias shift requires a minifloat format");
    if (folded_scales.size() != block_params.size()) fail("folded scale count mismatch");
    const MiniFloatFormat& format = minifloat_of(scheme.format);
    for (std::size_t i = 0; i < folded_scales.size(); ++i) {
      FoldedScale expected{};
      try {
        expected = fold_scale(format, block_params[i].scale);
      } catch (const Error&) {
        fail("block scale cannot be folded");
      }
      if (expected.value != folded_scales[i]) fail("folded scale does not match block scale");
    }
  } else if (!folded_scales.empty()) {
    fail("folded scales present without bias shift");
  }
}

void check_scheme(const QuantScheme& scheme) {
  if (scheme.granularity == Granularity::fgq && scheme.block_size == 0) {
    throw Error(ErrorKind::InvalidScheme, "FGQ block size must be at least 1");
  }
}

std::vector<BlockDescriptor> partition_blocks(std::size_t rows, std::size_t cols,
                                              const QuantScheme& scheme) {
  check_scheme(scheme);
  if (rows == 0 || cols == 0) throw Error(ErrorKind::InvalidInput, "partition_blocks needs rows, cols >= 1");
  const std::size_t width = scheme.granularity == Granularity::cgq ? cols : scheme.block_size;
  std::vector<BlockDescriptor> blocks;
  blocks.reserve(rows * ((cols + width - 1) / width));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; c += width) blocks.push_back({r, c, std::min(c + width, cols)});
  }
  return blocks;
}

BlockParams compute_scale_fp(std::span<const double> block, const MiniFloatFormat& format) {
  check_nonempty(block);
  check_finite(block);
  double max_abs = 0.0;
  for (double v : block) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0) return BlockParams{kHalfOne, std::nullopt};
  return BlockParams{to_half_scale(max_abs / format.max_value()), std::nullopt};
}

BlockParams compute_affine_params_int4(std::span<const double> block) {
  check_nonempty(block);
  check_finite(block);
  const auto [lo, hi] = std::minmax_element(block.begin(), block.end());
  const Half zero = to_half_checked(*lo, "zero point");
  if (*hi == *lo) return BlockParams{kHalfOne, zero};
  return BlockParams{to_half_scale((*hi - *lo) / double{kInt4MaxLevel}), zero};
}

QuantizedTensor quantize_tensor(const Matrix<double>& weights, const QuantScheme& scheme) {
  return quantize_impl(weights, scheme);
}

QuantizedTensor quantize_tensor(const Matrix<float>& weights, const QuantScheme& scheme) {
  return quantize_impl(weights, scheme);
}

QuantizedTensor enable_bias_shift(QuantizedTensor q) {
  if (!is_minifloat(q.scheme.format)) {
    throw Error(ErrorKind::InvalidScheme, "bias shift applies to minifloat formats only");
  }
  const MiniFloatFormat& format = minifloat_of(q.scheme.format);
  std::vector<Half> folded;
  folded.reserve(q.block_params.size());
  for (const BlockParams& p : q.block_params) folded.push_back(fold_scale(format, p.scale).value);
  q.folded_scales = std::move(folded);
  q.bias_shift = true;
  return q;
}

Matrix<double> dequantize_tensor(const QuantizedTensor& q) {
  q.validate();
  Matrix<double> out(q.rows, q.cols);
  const std::size_t width = q.effective_block_size();
  const std::size_t per_row = q.blocks_per_row();
  if (is_minifloat(q.scheme.format)) {
    const MiniFloatFormat& format = minifloat_of(q.scheme.format);
    const auto& segments = std::get<PackedSegments>(q.payload);
    for (std::size_t r = 0; r < q.rows; ++r) {
      for (std::size_t c = 0; c < q.cols; ++c) {
        const double s = q.block_params[r * per_row + c / width].scale.to_double();
        out(r, c) = s * decode(format, code_at(format, segments, r * q.cols + c));
      }
    }
  } else {
    const auto& nibbles = std::get<NibbleArray>(q.payload);
    for (std::size_t r = 0; r < q.rows; ++r) {
      for (std::size_t c = 0; c < q.cols; ++c) {
        const BlockParams& p = q.block_params[r * per_row + c / width];
        out(r, c) = p.scale.to_double() * level_at(nibbles, r * q.cols + c) + p.zero_point->to_double();
      }
    }
  }
  return out;
}

Matrix<double> dequantize_tensor(const QuantizedTensor& q, DequantPath path) {
  q.validate();
  Matrix<double> out(q.rows, q.cols);
  const std::size_t per_row = q.blocks_per_row();
  if (!is_minifloat(q.scheme.format)) {
    if (path == DequantPath::bias_shift) {
      throw Error(ErrorKind::PathUnavailable, "bias-shift path applies to minifloat formats only");
    }
    const auto& nibbles = std::get<NibbleArray>(q.payload);
    const std::size_t width = q.effective_block_size();
    for (std::size_t r = 0; r < q.rows; ++r) {
      for (std::size_t c = 0; c < q.cols; ++c) {
        const BlockParams& p = q.block_params[r * per_row + c / width];
        const Half level = Half::from_double(level_at(nibbles, r * q.cols + c));
        out(r, c) = (p.scale * level + *p.zero_point).to_double();
      }
    }
    return out;
  }
  if (path == DequantPath::bias_shift && !q.bias_shift) {
    throw Error(ErrorKind::PathUnavailable, "tensor was quantized without folded scales");
  }

  const MiniFloatFormat& format = minifloat_of(q.scheme.format);
  const auto& segments = std::get<PackedSegments>(q.payload);
  if (q.rows == 0 || q.cols == 0) return out;
  for (const BlockDescriptor& b : partition_blocks(q.rows, q.cols, q.scheme)) {
    const std::size_t index = b.row * per_row + b.col_start / q.effective_block_size();
    const std::size_t first = b.row * q.cols + b.col_start;
    const std::vector<Half> values =
        path == DequantPath::bias_shift
            ? dequant_block(format, segments, first, b.width(), FoldedScale{q.folded_scales[index]})
            : dequant_block(format, segments, first, b.width(), q.block_params[index].scale,
                            DequantPath::naive);
    for (std::size_t i = 0; i < values.size(); ++i) out(b.row, b.col_start + i) = values[i].to_double();
  }
  return out;
}

ErrorReport error_report(std::span<const double> reference, std::span<const double> approx) {
  if (reference.size() != approx.size()) throw Error(ErrorKind::ShapeError, "error_report: length mismatch");
  ErrorReport report;
  if (reference.empty()) {
    report.sqnr_db = std::numeric_limits<double>::infinity();
    return report;
  }
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double e = approx[i] - reference[i];
    noise += e * e;
    signal += reference[i] * reference[i];
    report.max_abs_error = std::max(report.max_abs_error, std::fabs(e));
  }
  report.mse = noise / static_cast<double>(reference.size());
  if (noise == 0.0) {
    report.sqnr_db = std::numeric_limits<double>::infinity();
  } else {
    report.sqnr_db = 10.0 * std::log10(signal / noise);
  }
  return report;
}

}  // namespace lpq
