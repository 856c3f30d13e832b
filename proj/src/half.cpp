#include "lpq/half.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace lpq {

Half Half::from_double(double x) noexcept {
  if (std::isnan(x)) return from_bits(0x7E00);
  const std::uint16_t sign = std::signbit(x) ? 0x8000 : 0x0000;
  const double a = std::fabs(x);
  if (a == 0.0) return from_bits(sign);
  if (std::isinf(a)) return from_bits(sign | 0x7C00);

  int e = 0;
  std::frexp(a, &e);  // a = f * 2^e, f in [0.5, 1)
  int exp = std::max(e - 1, -14);
  // Quantum of the target binade is 2^(exp-10); nearbyint rounds half-even.
  double q = std::nearbyint(std::ldexp(a, 10 - exp));
  if (q >= 2048.0) {
    q = 1024.0;
    ++exp;
  }
  if (exp > 15) return from_bits(sign | 0x7C00);
  const auto mag = static_cast<std::uint16_t>(q);
  if (mag < 1024) return from_bits(sign | mag);  // subnormal (exp == -14)
  return from_bits(static_cast<std::uint16_t>(sign | ((exp + 15) << 10) | (mag - 1024)));
}

double Half::to_double() const noexcept {
  const unsigned e = exponent_field();
  const unsigned m = mantissa_field();
  double v = 0.0;
  if (e == 0) {
    v = std::ldexp(static_cast<double>(m), -24);
  } else if (e == 0x1F) {
    v = m == 0 ? INFINITY : NAN;
  } else {
    v = std::ldexp(static_cast<double>(m + 1024), static_cast<int>(e) - 25);
  }
  return sign() ? -v : v;
}

float Half::to_float() const noexcept {
  static const std::array<float, 65536> table = [] {
    std::array<float, 65536> t{};
    for (std::uint32_t b = 0; b < t.size(); ++b) {
      t[b] = static_cast<float>(Half::from_bits(static_cast<std::uint16_t>(b)).to_double());
    }
    return t;
  }();
  return table[bits];
}

Half operator*(Half a, Half b) noexcept {
  return Half::from_double(a.to_double() * b.to_double());
}

Half operator+(Half a, Half b) noexcept {
  return Half::from_double(a.to_double() + b.to_double());
}

}  // namespace lpq
