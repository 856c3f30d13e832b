#pragma once

#include <cstddef>
#include <vector>

#include "lpq/half.hpp"
#include "lpq/packing.hpp"
#include "lpq/scalar_codec.hpp"

namespace lpq {

enum class DequantPath { naive, bias_shift };

inline constexpr int kHalfExponentBias = 15;
inline constexpr int kHalfMantissaBits = 10;

/// Power-of-two exponent absorbed into the scale when a minifloat exponent
/// field is reinterpreted under the binary16 bias: 15 - 3 = 12 for both
/// E3M2 and E3M1.
constexpr int bias_shift_exponent(const MiniFloatFormat& format) noexcept {
  return kHalfExponentBias - format.stored_bias;
}

/// Scale pre-multiplied by 2^bias_shift_exponent.
struct FoldedScale {
  Half value;
  friend constexpr bool operator==(FoldedScale, FoldedScale) noexcept = default;
};

/// Exact exponent shift of `scale`. Throws InvalidInput for non-positive or
/// non-finite scales and ScaleOverflow when the result is not finite.
FoldedScale fold_scale(const MiniFloatFormat& format, Half scale);

/// Step 1 of the naive path: the code's value as binary16. Normal codes get
/// their exponent field rebased by +12; subnormal codes keep a zero exponent
/// and are then multiplied by 2^12.
Half cast_to_half(const MiniFloatFormat& format, Code code);

/// The bias-shift bit composition sign<<15 | E<<10 | M<<(10-m). Its value is
/// decode(code) * 2^-12 for normal and subnormal codes alike.
Half compose_shifted(const MiniFloatFormat& format, Code code);

Half dequant_naive(const MiniFloatFormat& format, Code code, Half scale);
Half dequant_bias_shift(const MiniFloatFormat& format, Code code, FoldedScale folded);

/// Dequantize `count` codes starting at `first` with one block scale.
/// The bias-shift path folds `scale` itself (may throw ScaleOverflow).
std::vector<Half> dequant_block(const MiniFloatFormat& format, const PackedSegments& segments,
                                std::size_t first, std::size_t count, Half scale,
                                DequantPath path);
std::vector<Half> dequant_block(const MiniFloatFormat& format, const PackedSegments& segments,
                                std::size_t first, std::size_t count, FoldedScale folded);

}  // namespace lpq
