#include "lpq/dequant.hpp"

#include <cmath>
#include <string>

#include "lpq/error.hpp"

namespace lpq {

namespace {

void check_range(const PackedSegments& segments, std::size_t first, std::size_t count) {
  if (first > segments.code_count || count > segments.code_count - first) {
    throw Error(ErrorKind::PayloadMismatch, "block [" + std::to_string(first) + ", +" +
                                                std::to_string(count) + ") exceeds " +
                                                std::to_string(segments.code_count) + " codes");
  }
}

}  // namespace

FoldedScale fold_scale(const MiniFloatFormat& format, Half scale) {
  const double s = scale.to_double();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(ErrorKind::InvalidInput, "scale must be positive and finite");
  }
  const Half folded = Half::from_double(std::ldexp(s, bias_shift_exponent(format)));
  if (!folded.is_finite()) {
    throw Error(ErrorKind::ScaleOverflow,
                "scale " + std::to_string(s) + " * 2^" + std::to_string(bias_shift_exponent(format)) +
                    " overflows binary16");
  }
  return FoldedScale{folded};
}

Half compose_shifted(const MiniFloatFormat& format, Code code) {
  const CodeFields f = fields_of(format, code);
  const unsigned bits = (f.sign ? 0x8000u : 0u) | (f.exponent << kHalfMantissaBits) |
                        (f.mantissa << (kHalfMantissaBits - format.mantissa_bits));
  return Half::from_bits(static_cast<std::uint16_t>(bits));
}

Half cast_to_half(const MiniFloatFormat& format, Code code) {
  const CodeFields f = fields_of(format, code);
  const unsigned sign = f.sign ? 0x8000u : 0u;
  const unsigned mantissa = f.mantissa << (kHalfMantissaBits - format.mantissa_bits);
  const int shift = bias_shift_exponent(format);
  if (f.exponent == 0) {
    const Half tmp = Half::from_bits(static_cast<std::uint16_t>(sign | mantissa));
    return tmp * Half::from_double(std::ldexp(1.0, shift));
  }
  const unsigned exponent = f.exponent + static_cast<unsigned>(shift);
  return Half::from_bits(static_cast<std::uint16_t>(sign | (exponent << kHalfMantissaBits) | mantissa));
}

Half dequant_naive(const MiniFloatFormat& format, Code code, Half scale) {
  return cast_to_half(format, code) * scale;
}

Half dequant_bias_shift(const MiniFloatFormat& format, Code code, FoldedScale folded) {
  return compose_shifted(format, code) * folded.value;
}

std::vector<Half> dequant_block(const MiniFloatFormat& format, const PackedSegments& segments,
                                std::size_t first, std::size_t count, Half scale,
                                DequantPath path) {
  if (path == DequantPath::bias_shift) {
    return dequant_block(format, segments, first, count, fold_scale(format, scale));
  }
  check_segments(format, segments);
  check_range(segments, first, count);
  std::vector<Half> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = dequant_naive(format, code_at(format, segments, first + i), scale);
  }
  return out;
}

std::vector<Half> dequant_block(const MiniFloatFormat& format, const PackedSegments& segments,
                                std::size_t first, std::size_t count, FoldedScale folded) {
  check_segments(format, segments);
  check_range(segments, first, count);
  std::vector<Half> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = dequant_bias_shift(format, code_at(format, segments, first + i), folded);
  }
  return out;
}

}  // namespace lpq
