#pragma once

#include <cstdint>

namespace lpq {

/// IEEE 754 binary16 value held as its raw bit pattern.
///
/// Arithmetic is emulated: operands are widened to double (exact), the
/// operation is carried out exactly there, and the result is rounded once
/// to binary16 with round-to-nearest-even. For `*` and `+` of two binary16
/// values the double result is always exact, so this is the correctly
/// rounded IEEE result.
struct Half {
  std::uint16_t bits = 0;

  static constexpr Half from_bits(std::uint16_t b) noexcept { return Half{b}; }
  /// Round-to-nearest-even; overflow goes to infinity, NaN to a quiet NaN.
  static Half from_double(double x) noexcept;

  double to_double() const noexcept;
  /// Exact; table-driven.
  float to_float() const noexcept;

  constexpr bool sign() const noexcept { return (bits & 0x8000u) != 0; }
  constexpr unsigned exponent_field() const noexcept { return (bits >> 10) & 0x1Fu; }
  constexpr unsigned mantissa_field() const noexcept { return bits & 0x3FFu; }
  constexpr bool is_finite() const noexcept { return exponent_field() != 0x1Fu; }
  constexpr bool is_zero() const noexcept { return (bits & 0x7FFFu) == 0; }

  friend constexpr bool operator==(Half a, Half b) noexcept = default;
};

inline constexpr Half kHalfOne = Half::from_bits(0x3C00);
inline constexpr Half kHalfMax = Half::from_bits(0x7BFF);            // 65504
inline constexpr Half kHalfMinSubnormal = Half::from_bits(0x0001);   // 2^-24

Half operator*(Half a, Half b) noexcept;
Half operator+(Half a, Half b) noexcept;

}  // namespace lpq
