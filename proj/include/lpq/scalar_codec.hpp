#pragma once

#include <compare>
#include <cstdint>
#include <string_view>
#include <vector>

namespace lpq {

enum class MiniFloatKind : std::uint8_t { fp6_e3m2, fp5_e3m1 };

/// Static description of a sign/exponent/mantissa minifloat without
/// infinities or NaNs. Every bit pattern decodes to a finite value.
struct MiniFloatFormat {
  MiniFloatKind kind;
  std::string_view name;
  int exponent_bits;
  int mantissa_bits;
  int stored_bias;

  constexpr int total_bits() const noexcept { return 1 + exponent_bits + mantissa_bits; }
  constexpr unsigned code_count() const noexcept { return 1u << total_bits(); }
  /// Bits stored outside the 4-bit sign+exponent segment.
  constexpr int tail_bits() const noexcept { return mantissa_bits; }
  constexpr int max_exponent_field() const noexcept { return (1 << exponent_bits) - 1; }
  /// Largest finite magnitude, (2 - 2^-m) * 2^(2^e - 1 - bias).
  double max_value() const noexcept;
  /// Smallest normal magnitude, 2^(1 - bias).
  double min_normal() const noexcept;
};

inline constexpr MiniFloatFormat kFp6E3M2{MiniFloatKind::fp6_e3m2, "fp6_e3m2", 3, 2, 3};
inline constexpr MiniFloatFormat kFp5E3M1{MiniFloatKind::fp5_e3m1, "fp5_e3m1", 3, 1, 3};

constexpr const MiniFloatFormat& minifloat_format(MiniFloatKind kind) noexcept {
  return kind == MiniFloatKind::fp6_e3m2 ? kFp6E3M2 : kFp5E3M1;
}

/// A minifloat bit pattern, MSB to LSB: sign, exponent, mantissa.
struct Code {
  std::uint8_t bits = 0;
  friend constexpr auto operator<=>(Code, Code) = default;
};

struct CodeFields {
  bool sign;
  unsigned exponent;
  unsigned mantissa;
};

/// Throws InvalidCode when `code` does not fit the format width.
void check_code(const MiniFloatFormat& format, Code code);
CodeFields fields_of(const MiniFloatFormat& format, Code code);
Code compose_code(const MiniFloatFormat& format, CodeFields fields);

/// Exact value of a code. E == 0 codes are subnormal: M * 2^(1 - bias - m).
double decode(const MiniFloatFormat& format, Code code);

/// Nearest code to `x`, ties to even mantissa, saturating at +-max_value.
/// Both signed zeros map to the +0 code. Throws InvalidInput on NaN/inf.
Code encode_rtn(const MiniFloatFormat& format, double x);

struct CodebookEntry {
  Code code;
  double value;
};

/// All codes in ascending bit order with their decoded values.
std::vector<CodebookEntry> codebook(const MiniFloatFormat& format);

}  // namespace lpq
