#include "lpq/packing.hpp"

#include <string>

#include "lpq/error.hpp"

namespace lpq {

std::size_t seg4_bytes(std::size_t code_count) noexcept {
  return align4((code_count + 1) / 2);
}

std::size_t tail_bytes(const MiniFloatFormat& format, std::size_t code_count) noexcept {
  const auto bits = code_count * static_cast<std::size_t>(format.tail_bits());
  return align4((bits + 7) / 8);
}

std::size_t packed_bytes(const MiniFloatFormat& format, std::size_t code_count) noexcept {
  return seg4_bytes(code_count) + tail_bytes(format, code_count);
}

SegmentSplit split_code(const MiniFloatFormat& format, Code code) {
  check_code(format, code);
  const int tail = format.tail_bits();
  return {static_cast<std::uint8_t>(code.bits >> tail),
          static_cast<std::uint8_t>(code.bits & ((1u << tail) - 1u))};
}

Code join_code(const MiniFloatFormat& format, SegmentSplit split) noexcept {
  return Code{static_cast<std::uint8_t>((split.seg4 << format.tail_bits()) | split.tail)};
}

PackedSegments pack(const MiniFloatFormat& format, std::span<const Code> codes) {
  PackedSegments out;
  out.code_count = codes.size();
  out.seg4.assign(seg4_bytes(codes.size()), 0);
  out.seg_tail.assign(tail_bytes(format, codes.size()), 0);

  const unsigned tail = static_cast<unsigned>(format.tail_bits());
  const unsigned lanes = 8 / tail;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const SegmentSplit s = split_code(format, codes[i]);
    out.seg4[i / 2] |= static_cast<std::uint8_t>(s.seg4 << ((i & 1u) * 4));
    out.seg_tail[i / lanes] |= static_cast<std::uint8_t>(s.tail << ((i % lanes) * tail));
  }
  return out;
}

void check_segments(const MiniFloatFormat& format, const PackedSegments& segments) {
  const std::size_t n = segments.code_count;
  if (segments.seg4.size() != seg4_bytes(n) || segments.seg_tail.size() != tail_bytes(format, n)) {
    throw Error(ErrorKind::PayloadMismatch,
                "segment arrays (" + std::to_string(segments.seg4.size()) + ", " +
                    std::to_string(segments.seg_tail.size()) + " bytes) do not hold " +
                    std::to_string(n) + " codes");
  }
}

Code code_at(const MiniFloatFormat& format, const PackedSegments& segments,
             std::size_t index) noexcept {
  const unsigned tail = static_cast<unsigned>(format.tail_bits());
  const unsigned lanes = 8 / tail;
  const auto hi = static_cast<std::uint8_t>((segments.seg4[index / 2] >> ((index & 1u) * 4)) & 0x0F);
  const auto lo = static_cast<std::uint8_t>((segments.seg_tail[index / lanes] >> ((index % lanes) * tail)) &
                                            ((1u << tail) - 1u));
  return join_code(format, {hi, lo});
}

std::vector<Code> unpack(const MiniFloatFormat& format, const PackedSegments& segments) {
  check_segments(format, segments);
  std::vector<Code> codes(segments.code_count);
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = code_at(format, segments, i);
  return codes;
}

NibbleArray pack_int4(std::span<const std::uint8_t> levels) {
  NibbleArray out;
  out.count = levels.size();
  out.bytes.assign(int4_bytes(levels.size()), 0);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] > 15) {
      throw Error(ErrorKind::InvalidCode, "INT4 level " + std::to_string(levels[i]) + " exceeds 15");
    }
    out.bytes[i / 2] |= static_cast<std::uint8_t>(levels[i] << ((i & 1u) * 4));
  }
  return out;
}

std::vector<std::uint8_t> unpack_int4(const NibbleArray& nibbles) {
  if (nibbles.bytes.size() != int4_bytes(nibbles.count)) {
    throw Error(ErrorKind::PayloadMismatch, "nibble array of " + std::to_string(nibbles.bytes.size()) +
                                                " bytes does not hold " + std::to_string(nibbles.count) +
                                                " levels");
  }
  std::vector<std::uint8_t> levels(nibbles.count);
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = level_at(nibbles, i);
  return levels;
}

}  // namespace lpq
