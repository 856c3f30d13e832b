#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lpq/dequant.hpp"
#include "lpq/error.hpp"
#include "oracles.hpp"

using namespace lpq;

namespace {

Half h(double v) { return Half::from_double(v); }
Code c(unsigned b) { return Code{static_cast<std::uint8_t>(b)}; }

}  // namespace

TEST(FoldScale, Examples) {
  EXPECT_EQ(fold_scale(kFp6E3M2, h(std::ldexp(1.0, -5))).value.to_double(), 128.0);
  EXPECT_EQ(fold_scale(kFp6E3M2, h(1.0)).value.to_double(), 4096.0);
  try {
    fold_scale(kFp6E3M2, h(32.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ScaleOverflow);
  }
}

TEST(FoldScale, BoundaryAndSubnormalScales) {
  EXPECT_EQ(fold_scale(kFp6E3M2, Half::from_bits(0x4BFF)).value.bits, 0x7BFF);  // 15.99 * 4096 = 65504
  EXPECT_THROW(fold_scale(kFp6E3M2, h(16.0)), Error);
  // Subnormal 2^-24 becomes normal 2^-12 exactly.
  EXPECT_EQ(fold_scale(kFp6E3M2, kHalfMinSubnormal).value.to_double(), std::ldexp(1.0, -12));
  EXPECT_THROW(fold_scale(kFp6E3M2, h(0.0)), Error);
  EXPECT_THROW(fold_scale(kFp6E3M2, h(-1.0)), Error);
  EXPECT_EQ(bias_shift_exponent(kFp6E3M2), 12);
  EXPECT_EQ(bias_shift_exponent(kFp5E3M1), 12);
}

TEST(DequantNaive, Examples) {
  EXPECT_EQ(dequant_naive(kFp6E3M2, c(0b011111), h(std::ldexp(1.0, -5))).to_double(), 0.875);
  EXPECT_EQ(dequant_naive(kFp6E3M2, c(0), h(3.5)).to_double(), 0.0);
  EXPECT_EQ(dequant_naive(kFp6E3M2, c(0b000001), h(1.0)).to_double(), 0.0625);
}

TEST(DequantBiasShift, Examples) {
  EXPECT_EQ(compose_shifted(kFp6E3M2, c(0b011111)).bits, 0x1F00);
  EXPECT_EQ(compose_shifted(kFp6E3M2, c(0b011111)).to_double(), 0.0068359375);
  EXPECT_EQ(dequant_bias_shift(kFp6E3M2, c(0b011111), FoldedScale{h(128.0)}).to_double(), 0.875);
  EXPECT_EQ(dequant_bias_shift(kFp6E3M2, c(0b000001), FoldedScale{h(4096.0)}).to_double(), 0.0625);
  const Half negzero = dequant_bias_shift(kFp6E3M2, c(0b100000), FoldedScale{h(77.0)});
  EXPECT_EQ(negzero.bits, 0x8000);
}

TEST(CastToHalf, EqualsCodeValueForEveryCode) {
  for (const MiniFloatFormat* f : {&kFp6E3M2, &kFp5E3M1}) {
    for (const auto& e : codebook(*f)) {
      EXPECT_EQ(cast_to_half(*f, e.code).to_double(), e.value) << int(e.code.bits);
      EXPECT_EQ(compose_shifted(*f, e.code).to_double(), std::ldexp(e.value, -12)) << int(e.code.bits);
    }
  }
}

TEST(DequantBlock, Examples) {
  const std::vector<Code> codes{c(0b011111), c(0b001100), c(0), c(0b100001)};
  const PackedSegments p = pack(kFp6E3M2, codes);
  const auto naive = dequant_block(kFp6E3M2, p, 0, 4, h(1.0), DequantPath::naive);
  ASSERT_EQ(naive.size(), 4u);
  EXPECT_EQ(naive[0].to_double(), 28.0);
  EXPECT_EQ(naive[1].to_double(), 1.0);
  EXPECT_EQ(naive[2].to_double(), 0.0);
  EXPECT_EQ(naive[3].to_double(), -0.0625);
  const auto shifted = dequant_block(kFp6E3M2, p, 0, 4, h(1.0), DequantPath::bias_shift);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(shifted[i].bits, naive[i].bits);

  const PackedSegments zeros = pack(kFp6E3M2, std::vector<Code>(10, c(0)));
  for (Half v : dequant_block(kFp6E3M2, zeros, 2, 8, h(0.3), DequantPath::naive)) EXPECT_EQ(v.bits, 0);
}

TEST(DequantBlock, RangeAndPayloadErrors) {
  const PackedSegments p = pack(kFp6E3M2, std::vector<Code>(4, c(1)));
  EXPECT_THROW(dequant_block(kFp6E3M2, p, 2, 3, h(1.0), DequantPath::naive), Error);
  PackedSegments broken = p;
  broken.seg_tail.clear();
  try {
    dequant_block(kFp6E3M2, broken, 0, 1, h(1.0), DequantPath::naive);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PayloadMismatch);
  }
}

TEST(Properties, PathsAgreeOnRandomCodesAndScales) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<unsigned> scale_bits(0x0001, 0x4BFF);
  for (const MiniFloatFormat* f : {&kFp6E3M2, &kFp5E3M1}) {
    std::uniform_int_distribution<unsigned> code_bits(0, f->code_count() - 1);
    for (int i = 0; i < 1000; ++i) {
      const Half s = Half::from_bits(static_cast<std::uint16_t>(scale_bits(rng)));
      const Code code = c(code_bits(rng));
      ASSERT_EQ(dequant_naive(*f, code, s).bits, dequant_bias_shift(*f, code, fold_scale(*f, s)).bits);
    }
  }
}

TEST(Properties, SubnormalCodesOnBothPaths) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<unsigned> scale_bits(0x0001, 0x4BFF);
  for (int i = 0; i < 100; ++i) {
    const Half s = Half::from_bits(static_cast<std::uint16_t>(scale_bits(rng)));
    for (const MiniFloatFormat* f : {&kFp6E3M2, &kFp5E3M1}) {
      for (unsigned m = 1; m < (1u << f->mantissa_bits); ++m) {
        for (bool neg : {false, true}) {
          const Code code = compose_code(*f, {neg, 0, m});
          const double expected = Half::from_double((neg ? -1.0 : 1.0) * s.to_double() * m *
                                                    std::ldexp(1.0, 1 - 3 - f->mantissa_bits))
                                      .to_double();
          ASSERT_EQ(dequant_naive(*f, code, s).to_double(), expected);
          ASSERT_EQ(dequant_bias_shift(*f, code, fold_scale(*f, s)).to_double(), expected);
        }
      }
    }
  }
}

TEST(Properties, PowerOfTwoScalesAreExact) {
  for (int e = -24; e <= 3; ++e) {
    const Half s = h(std::ldexp(1.0, e));
    for (const auto& entry : codebook(kFp6E3M2)) {
      const double exact = std::ldexp(entry.value, e);
      const Half got = dequant_naive(kFp6E3M2, entry.code, s);
      // Exact unless the product drops below the binary16 subnormal grid.
      if (std::fabs(exact) >= std::ldexp(1.0, -14) || exact == 0.0) {
        ASSERT_EQ(got.to_double(), exact) << e << " " << int(entry.code.bits);
      }
    }
  }
}
