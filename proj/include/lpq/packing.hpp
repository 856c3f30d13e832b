#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lpq/scalar_codec.hpp"

namespace lpq {

/// Codes split into two bit-plane arrays: the 4-bit sign+exponent segment and
/// the mantissa tail (2 bits for FP6, 1 bit for FP5).
///
/// Byte layout (normative, also used by the .lpqt container):
///   seg4     two segments per byte, code 2j in the low nibble, 2j+1 high.
///   seg_tail FP6: four 2-bit lanes per byte, code i in bits [2(i%4)+1 : 2(i%4)].
///            FP5: eight 1-bit lanes per byte, code i in bit (i%8).
/// Both arrays are zero-padded to a multiple of 4 bytes.
struct PackedSegments {
  std::vector<std::uint8_t> seg4;
  std::vector<std::uint8_t> seg_tail;
  std::size_t code_count = 0;

  friend bool operator==(const PackedSegments&, const PackedSegments&) = default;
};

/// Two 4-bit levels per byte, even index in the low nibble. No alignment.
struct NibbleArray {
  std::vector<std::uint8_t> bytes;
  std::size_t count = 0;

  friend bool operator==(const NibbleArray&, const NibbleArray&) = default;
};

struct SegmentSplit {
  std::uint8_t seg4;
  std::uint8_t tail;
};

constexpr std::size_t align4(std::size_t n) noexcept { return (n + 3) & ~std::size_t{3}; }

std::size_t seg4_bytes(std::size_t code_count) noexcept;
std::size_t tail_bytes(const MiniFloatFormat& format, std::size_t code_count) noexcept;
/// Total packed bytes for `code_count` codes (both segment arrays).
std::size_t packed_bytes(const MiniFloatFormat& format, std::size_t code_count) noexcept;

SegmentSplit split_code(const MiniFloatFormat& format, Code code);
Code join_code(const MiniFloatFormat& format, SegmentSplit split) noexcept;

PackedSegments pack(const MiniFloatFormat& format, std::span<const Code> codes);
/// Throws PayloadMismatch when array lengths disagree with `code_count`.
std::vector<Code> unpack(const MiniFloatFormat& format, const PackedSegments& segments);
/// Lengths check only; used before random access through `code_at`.
void check_segments(const MiniFloatFormat& format, const PackedSegments& segments);
/// Single-code random access. No bounds checks.
Code code_at(const MiniFloatFormat& format, const PackedSegments& segments, std::size_t index) noexcept;

NibbleArray pack_int4(std::span<const std::uint8_t> levels);
std::vector<std::uint8_t> unpack_int4(const NibbleArray& nibbles);
constexpr std::size_t int4_bytes(std::size_t count) noexcept { return (count + 1) / 2; }

inline std::uint8_t level_at(const NibbleArray& nibbles, std::size_t index) noexcept {
  const std::uint8_t byte = nibbles.bytes[index / 2];
  return (index & 1u) ? byte >> 4 : byte & 0x0F;
}

}  // namespace lpq
