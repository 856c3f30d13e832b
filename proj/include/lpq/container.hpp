#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lpq/matrix.hpp"
#include "lpq/quantizer.hpp"

namespace lpq {

// .lpqt layout, little-endian, every section starting on an 8-byte boundary
// with zero padding:
//
//   offset size
//   0      4    magic "LPQT"
//   4      2    version (1)
//   6      1    format (0 fp6_e3m2, 1 fp5_e3m1, 2 int4_asym)
//   7      1    granularity (0 cgq, 1 fgq)
//   8      4    block_size (0 for cgq)
//   12     8    rows
//   20     8    cols
//   28     1    bias_shift flag
//   29     7    reserved, zero
//   36     4    pad -> 40
//   scales         binary16 x blocks
//   zero points    binary16 x blocks      (int4 only)
//   folded scales  binary16 x blocks      (bias_shift only)
//   u64 length + seg4 bytes               (minifloat)
//   u64 length + tail bytes               (minifloat)
//   u64 length + nibble bytes             (int4)

inline constexpr std::array<std::uint8_t, 4> kLpqtMagic{'L', 'P', 'Q', 'T'};
inline constexpr std::uint16_t kLpqtVersion = 1;
inline constexpr std::size_t kLpqtHeaderBytes = 36;
inline constexpr std::size_t kLpqtAlignment = 8;

std::vector<std::uint8_t> write_lpqt(const QuantizedTensor& q);

/// Throws BadMagic, UnsupportedVersion, TruncatedPayload, or
/// InvariantViolation. Never returns a partially valid tensor.
QuantizedTensor read_lpqt(std::span<const std::uint8_t> bytes);

enum class RawDtype { f32le, f16le };

constexpr std::size_t dtype_width(RawDtype d) noexcept { return d == RawDtype::f32le ? 4 : 2; }

/// Headerless row-major tensor. Throws LengthMismatch.
Matrix<double> read_raw(std::span<const std::uint8_t> bytes, std::size_t rows, std::size_t cols,
                        RawDtype dtype);
/// Values are rounded to the target dtype (round-to-nearest-even).
std::vector<std::uint8_t> write_raw(std::span<const double> values, RawDtype dtype);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lpq
