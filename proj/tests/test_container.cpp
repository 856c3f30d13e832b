#include <gtest/gtest.h>

#include <random>

#include "lpq/container.hpp"
#include "lpq/error.hpp"
#include "oracles.hpp"

using namespace lpq;

namespace {

ErrorKind read_error(const std::vector<std::uint8_t>& bytes) {
  try {
    read_lpqt(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "stream was accepted";
  return ErrorKind::UsageError;
}

std::uint64_t le64(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[at + i]} << (8 * i);
  return v;
}

QuantizedTensor sample(NumericFormat f, Granularity g, bool shift, std::size_t rows, std::size_t cols,
                       std::uint64_t seed) {
  const Matrix<double> w(rows, cols, oracle::gaussian(rows * cols, seed));
  QuantizedTensor q = quantize_tensor(w, {g, 5, f});
  return shift ? enable_bias_shift(std::move(q)) : q;
}

}  // namespace

TEST(WriteLpqt, HeaderLayout) {
  const QuantizedTensor q = quantize_tensor(Matrix<double>(1, 4, {1, 2, 3, 4}),
                                            {Granularity::cgq, 0, NumericFormat::fp6_e3m2});
  const auto bytes = write_lpqt(q);
  ASSERT_GE(bytes.size(), 42u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LPQT");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);  // fp6
  EXPECT_EQ(bytes[7], 0);  // cgq
  EXPECT_EQ(le64(bytes, 12), 1u);
  EXPECT_EQ(le64(bytes, 20), 4u);
  for (std::size_t i = 28; i < 40; ++i) EXPECT_EQ(bytes[i], 0) << i;
  // One binary16 scale directly after the 40-byte header.
  const Half s = q.block_params[0].scale;
  EXPECT_EQ(bytes[40], s.bits & 0xFF);
  EXPECT_EQ(bytes[41], s.bits >> 8);
  // scales(8) + seg4 len(8) + 4 + tail len(8) + 4, each 8-aligned.
  EXPECT_EQ(le64(bytes, 48), 4u);
  EXPECT_EQ(le64(bytes, 64), 4u);
  EXPECT_EQ(bytes.size(), 80u);
}

TEST(WriteLpqt, EmptyTensor) {
  const QuantizedTensor q = quantize_tensor(Matrix<double>(), {Granularity::cgq, 0, NumericFormat::fp5_e3m1});
  const auto bytes = write_lpqt(q);
  EXPECT_EQ(bytes.size(), 40u + 8u + 8u);
  EXPECT_EQ(le64(bytes, 12), 0u);
  EXPECT_EQ(le64(bytes, 20), 0u);
  EXPECT_EQ(read_lpqt(bytes), q);
}

TEST(ReadLpqt, RoundTripAllFormatsAndSchemes) {
  std::uint64_t seed = 1;
  for (NumericFormat f : {NumericFormat::fp6_e3m2, NumericFormat::fp5_e3m1, NumericFormat::int4_asym}) {
    for (Granularity g : {Granularity::cgq, Granularity::fgq}) {
      for (bool shift : {false, true}) {
        if (shift && !is_minifloat(f)) continue;
        for (auto [r, c] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 7}, {9, 33}}) {
          const QuantizedTensor q = sample(f, g, shift, r, c, seed++);
          const auto bytes = write_lpqt(q);
          EXPECT_EQ(bytes.size() % 8, 0u);
          const QuantizedTensor back = read_lpqt(bytes);
          EXPECT_EQ(back, q);
          EXPECT_EQ(write_lpqt(back), bytes);
        }
      }
    }
  }
}

TEST(ReadLpqt, BadMagicAndVersion) {
  auto bytes = write_lpqt(sample(NumericFormat::fp6_e3m2, Granularity::cgq, false, 2, 2, 1));
  auto wrong = bytes;
  wrong[0] = 'Q';
  wrong[1] = 'P';
  wrong[2] = 'T';
  wrong[3] = '?';
  EXPECT_EQ(read_error(wrong), ErrorKind::BadMagic);
  EXPECT_EQ(read_error({'L', 'P'}), ErrorKind::BadMagic);
  auto v2 = bytes;
  v2[4] = 2;
  EXPECT_EQ(read_error(v2), ErrorKind::UnsupportedVersion);
}

TEST(ReadLpqt, TruncatedAnywhere) {
  const auto bytes = write_lpqt(sample(NumericFormat::int4_asym, Granularity::fgq, false, 4, 9, 2));
  for (std::size_t cut = 4; cut < bytes.size(); ++cut) {
    const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + cut);
    const ErrorKind k = read_error(head);
    EXPECT_TRUE(k == ErrorKind::TruncatedPayload) << cut << " " << to_string(k);
  }
}

TEST(ReadLpqt, InvariantViolations) {
  const auto good = write_lpqt(sample(NumericFormat::fp6_e3m2, Granularity::fgq, true, 3, 11, 3));
  auto mutate = [&](std::size_t at, std::uint8_t v) {
    auto b = good;
    b[at] = v;
    return read_error(b);
  };
  EXPECT_EQ(mutate(6, 7), ErrorKind::InvariantViolation);   // format
  EXPECT_EQ(mutate(7, 2), ErrorKind::InvariantViolation);   // granularity
  EXPECT_EQ(mutate(28, 2), ErrorKind::InvariantViolation);  // bias flag
  EXPECT_EQ(mutate(30, 1), ErrorKind::InvariantViolation);  // reserved
  EXPECT_EQ(mutate(37, 1), ErrorKind::InvariantViolation);  // header pad
  // cols 11 -> 40: block and payload sizes no longer line up.
  const ErrorKind cols = mutate(20, 40);
  EXPECT_TRUE(cols == ErrorKind::InvariantViolation || cols == ErrorKind::TruncatedPayload) << to_string(cols);

  auto trailing = good;
  trailing.insert(trailing.end(), 8, 0);
  EXPECT_EQ(read_error(trailing), ErrorKind::InvariantViolation);

  // A folded scale that disagrees with its scale.
  auto folded = good;
  const std::size_t blocks = 3 * 3;
  const std::size_t folded_at = 40 + 24;  // scales occupy 18 bytes padded to 24
  ASSERT_EQ(blocks * 2 + 6, 24u);
  folded[folded_at] ^= 1;
  EXPECT_EQ(read_error(folded), ErrorKind::InvariantViolation);

  // Nonzero pad bits in the last seg4 byte of an odd count.
  const auto odd = write_lpqt(sample(NumericFormat::fp5_e3m1, Granularity::cgq, false, 1, 3, 4));
  const QuantizedTensor q = read_lpqt(odd);
  auto padded = odd;
  const std::size_t seg4_at = 40 + 8 + 8;
  ASSERT_EQ(le64(padded, seg4_at - 8), std::get<PackedSegments>(q.payload).seg4.size());
  padded[seg4_at + 1] |= 0xF0;
  EXPECT_EQ(read_error(padded), ErrorKind::InvariantViolation);
}

TEST(ReadRaw, Examples) {
  const std::vector<std::uint8_t> one{0, 0, 128, 63};
  EXPECT_EQ(read_raw(one, 1, 1, RawDtype::f32le), Matrix<double>(1, 1, {1.0}));
  const std::vector<std::uint8_t> zeros(8, 0);
  EXPECT_EQ(read_raw(zeros, 2, 2, RawDtype::f16le), Matrix<double>(2, 2, 0.0));
  try {
    read_raw(zeros, 3, 3, RawDtype::f32le);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
  const std::vector<std::uint8_t> h{0x00, 0x3C, 0x00, 0xC0};
  EXPECT_EQ(read_raw(h, 1, 2, RawDtype::f16le), Matrix<double>(1, 2, {1.0, -2.0}));
}

TEST(WriteRaw, RoundTripsRepresentableValues) {
  const std::vector<double> v{0.5, -1.0, 14.0, 65504.0};
  for (RawDtype d : {RawDtype::f32le, RawDtype::f16le}) {
    EXPECT_EQ(read_raw(write_raw(v, d), 1, 4, d).storage(), v);
  }
}
