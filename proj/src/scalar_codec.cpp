#include "lpq/scalar_codec.hpp"

#include <cmath>
#include <string>

#include "lpq/error.hpp"

namespace lpq {

double MiniFloatFormat::max_value() const noexcept {
  return (2.0 - std::ldexp(1.0, -mantissa_bits)) *
         std::ldexp(1.0, max_exponent_field() - stored_bias);
}

double MiniFloatFormat::min_normal() const noexcept {
  return std::ldexp(1.0, 1 - stored_bias);
}

void check_code(const MiniFloatFormat& format, Code code) {
  if (code.bits >= format.code_count()) {
    throw Error(ErrorKind::InvalidCode, "code " + std::to_string(code.bits) + " exceeds " +
                                            std::to_string(format.total_bits()) + "-bit width of " +
                                            std::string(format.name));
  }
}

CodeFields fields_of(const MiniFloatFormat& format, Code code) {
  check_code(format, code);
  const unsigned m = static_cast<unsigned>(format.mantissa_bits);
  const unsigned e = static_cast<unsigned>(format.exponent_bits);
  return CodeFields{
      .sign = ((code.bits >> (e + m)) & 1u) != 0,
      .exponent = (code.bits >> m) & ((1u << e) - 1u),
      .mantissa = code.bits & ((1u << m) - 1u),
  };
}

Code compose_code(const MiniFloatFormat& format, CodeFields f) {
  const unsigned m = static_cast<unsigned>(format.mantissa_bits);
  const unsigned e = static_cast<unsigned>(format.exponent_bits);
  return Code{static_cast<std::uint8_t>((f.sign ? 1u << (e + m) : 0u) | (f.exponent << m) | f.mantissa)};
}

double decode(const MiniFloatFormat& format, Code code) {
  const CodeFields f = fields_of(format, code);
  const int m = format.mantissa_bits;
  double magnitude = 0.0;
  if (f.exponent == 0) {
    magnitude = std::ldexp(static_cast<double>(f.mantissa), 1 - format.stored_bias - m);
  } else {
    magnitude = std::ldexp(static_cast<double>((1u << m) + f.mantissa),
                           static_cast<int>(f.exponent) - format.stored_bias - m);
  }
  return f.sign ? -magnitude : magnitude;
}

Code encode_rtn(const MiniFloatFormat& format, double x) {
  if (!std::isfinite(x)) {
    throw Error(ErrorKind::InvalidInput, "cannot encode non-finite value");
  }
  const bool negative = x < 0.0;
  const double a = std::fabs(x);
  const int m = format.mantissa_bits;
  const int bias = format.stored_bias;

  if (a >= format.max_value()) {
    return compose_code(format, {negative, static_cast<unsigned>(format.max_exponent_field()),
                                 (1u << m) - 1u});
  }

  // Exponent of the binade containing `a`, floored at the subnormal binade.
  int binade = 1 - bias;
  if (a >= format.min_normal()) {
    int e = 0;
    std::frexp(a, &e);
    binade = e - 1;
  }
  // In units of the binade's quantum the target is an integer; nearbyint is
  // round-half-even, and integer parity equals mantissa LSB parity.
  const double steps = std::nearbyint(std::ldexp(a, m - binade));
  auto q = static_cast<unsigned>(steps);
  if (q == 0) return Code{0};

  unsigned exponent_field = 0;
  if (binade == 1 - bias && q < (1u << m)) {
    exponent_field = 0;  // subnormal: q is the mantissa
  } else {
    if (q == (2u << m)) {  // rounded up into the next binade
      q = 1u << m;
      ++binade;
    }
    exponent_field = static_cast<unsigned>(binade + bias);
    q -= 1u << m;
  }
  return compose_code(format, {negative, exponent_field, q});
}

std::vector<CodebookEntry> codebook(const MiniFloatFormat& format) {
  std::vector<CodebookEntry> entries;
  entries.reserve(format.code_count());
  for (unsigned bits = 0; bits < format.code_count(); ++bits) {
    const Code c{static_cast<std::uint8_t>(bits)};
    entries.push_back({c, decode(format, c)});
  }
  return entries;
}

}  // namespace lpq
