#include "lpq/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "lpq/error.hpp"

namespace lpq {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  void align() {
    while (bytes_.size() % kLpqtAlignment != 0) bytes_.push_back(0);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }

  std::span<const std::uint8_t> take(std::uint64_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }

  void align() {
    const std::size_t pad = (kLpqtAlignment - pos_ % kLpqtAlignment) % kLpqtAlignment;
    for (std::uint8_t b : take(pad)) {
      if (b != 0) throw Error(ErrorKind::InvariantViolation, "nonzero section padding");
    }
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining()) {
      throw Error(ErrorKind::TruncatedPayload, "stream ends at byte " + std::to_string(bytes_.size()) +
                                                   ", needed " + std::to_string(n) + " more from " +
                                                   std::to_string(pos_));
    }
  }
  std::uint64_t get_le(int width) {
    auto data = take(static_cast<std::uint64_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(data[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_halves(Writer& w, std::span<const Half> values) {
  for (Half h : values) w.u16(h.bits);
  w.align();
}

std::vector<Half> read_halves(Reader& r, std::size_t count) {
  // Bound the allocation by what the stream can actually hold.
  if (count > r.remaining() / 2) throw Error(ErrorKind::TruncatedPayload, "stream too short for block parameters");
  std::vector<Half> out(count);
  for (Half& h : out) h = Half::from_bits(r.u16());
  r.align();
  return out;
}

void write_section(Writer& w, std::span<const std::uint8_t> data) {
  w.u64(data.size());
  w.raw(data);
  w.align();
}

std::vector<std::uint8_t> read_section(Reader& r, std::size_t expected, const char* name) {
  const std::uint64_t length = r.u64();
  if (length != expected) {
    throw Error(ErrorKind::InvariantViolation, std::string(name) + " length " + std::to_string(length) +
                                                   " does not match expected " + std::to_string(expected));
  }
  auto data = r.take(length);
  r.align();
  return {data.begin(), data.end()};
}

void check_pad_bits(const MiniFloatFormat& format, const PackedSegments& s) {
  const PackedSegments canonical = pack(format, unpack(format, s));
  if (canonical.seg4 != s.seg4 || canonical.seg_tail != s.seg_tail) {
    throw Error(ErrorKind::InvariantViolation, "nonzero pad bits in segment arrays");
  }
}

}  // namespace

std::vector<std::uint8_t> write_lpqt(const QuantizedTensor& q) {
  q.validate();
  Writer w;
  for (std::uint8_t c : kLpqtMagic) w.u8(c);
  w.u16(kLpqtVersion);
  w.u8(static_cast<std::uint8_t>(q.scheme.format));
  w.u8(static_cast<std::uint8_t>(q.scheme.granularity));
  w.u32(static_cast<std::uint32_t>(q.scheme.block_size));
  w.u64(q.rows);
  w.u64(q.cols);
  w.u8(q.bias_shift ? 1 : 0);
  for (int i = 0; i < 7; ++i) w.u8(0);
  w.align();

  std::vector<Half> scales;
  std::vector<Half> zeros;
  for (const BlockParams& p : q.block_params) {
    scales.push_back(p.scale);
    if (p.zero_point) zeros.push_back(*p.zero_point);
  }
  write_halves(w, scales);
  if (!is_minifloat(q.scheme.format)) write_halves(w, zeros);
  if (q.bias_shift) write_halves(w, q.folded_scales);

  if (const auto* s = std::get_if<PackedSegments>(&q.payload)) {
    write_section(w, s->seg4);
    write_section(w, s->seg_tail);
  } else {
    write_section(w, std::get<NibbleArray>(q.payload).bytes);
  }
  return w.take();
}

QuantizedTensor read_lpqt(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < kLpqtMagic.size() || !std::equal(kLpqtMagic.begin(), kLpqtMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::BadMagic, "stream does not start with LPQT");
  }
  r.take(kLpqtMagic.size());
  const std::uint16_t version = r.u16();
  if (version != kLpqtVersion) {
    throw Error(ErrorKind::UnsupportedVersion, "unsupported .lpqt version " + std::to_string(version));
  }
  const std::uint8_t format = r.u8();
  const std::uint8_t granularity = r.u8();
  const std::uint32_t block_size = r.u32();
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  const std::uint8_t bias_shift = r.u8();
  for (std::uint8_t b : r.take(7)) {
    if (b != 0) throw Error(ErrorKind::InvariantViolation, "reserved header bytes must be zero");
  }
  r.align();

  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvariantViolation, what); };
  if (format > 2) fail("unknown format " + std::to_string(format));
  if (granularity > 1) fail("unknown granularity " + std::to_string(granularity));
  if (bias_shift > 1) fail("bias_shift flag must be 0 or 1");
  if (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / cols) fail("rows * cols overflows");
  if (rows * cols > std::numeric_limits<std::size_t>::max() / 2) fail("tensor too large");

  QuantizedTensor q;
  q.rows = static_cast<std::size_t>(rows);
  q.cols = static_cast<std::size_t>(cols);
  q.scheme = QuantScheme{static_cast<Granularity>(granularity), block_size, static_cast<NumericFormat>(format)};
  q.bias_shift = bias_shift != 0;
  if (q.scheme.granularity == Granularity::fgq && block_size == 0) fail("FGQ block size is zero");
  if (q.scheme.granularity == Granularity::cgq && block_size != 0) fail("CGQ block size must be 0");

  const std::size_t blocks = q.block_count();
  const bool minifloat = is_minifloat(q.scheme.format);
  const std::vector<Half> scales = read_halves(r, blocks);
  std::vector<Half> zeros;
  if (!minifloat) zeros = read_halves(r, blocks);
  if (q.bias_shift) q.folded_scales = read_halves(r, blocks);
  q.block_params.resize(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    q.block_params[i].scale = scales[i];
    if (!minifloat) q.block_params[i].zero_point = zeros[i];
  }

  const std::size_t n = q.rows * q.cols;
  if (minifloat) {
    const MiniFloatFormat& mf = minifloat_of(q.scheme.format);
    PackedSegments s;
    s.code_count = n;
    s.seg4 = read_section(r, seg4_bytes(n), "seg4");
    s.seg_tail = read_section(r, tail_bytes(mf, n), "tail segment");
    check_pad_bits(mf, s);
    q.payload = std::move(s);
  } else {
    NibbleArray a;
    a.count = n;
    a.bytes = read_section(r, int4_bytes(n), "nibble payload");
    if (n % 2 == 1 && (a.bytes.back() >> 4) != 0) fail("nonzero pad nibble");
    q.payload = std::move(a);
  }
  if (r.remaining() != 0) fail("trailing bytes after payload");

  try {
    q.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::InvariantViolation, e.what());
  }
  return q;
}

Matrix<double> read_raw(std::span<const std::uint8_t> bytes, std::size_t rows, std::size_t cols,
                        RawDtype dtype) {
  const std::size_t width = dtype_width(dtype);
  if (cols != 0 && rows > std::numeric_limits<std::size_t>::max() / cols / width) {
    throw Error(ErrorKind::LengthMismatch, "shape too large");
  }
  const std::size_t n = rows * cols;
  if (bytes.size() != n * width) {
    throw Error(ErrorKind::LengthMismatch, "raw tensor has " + std::to_string(bytes.size()) + " bytes, shape " +
                                               std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                                               std::to_string(n * width));
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = bytes.data() + i * width;
    if (dtype == RawDtype::f32le) {
      const std::uint32_t bits = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
                                 std::uint32_t{p[3]} << 24;
      values[i] = std::bit_cast<float>(bits);
    } else {
      values[i] = Half::from_bits(static_cast<std::uint16_t>(p[0] | p[1] << 8)).to_double();
    }
  }
  return Matrix<double>(rows, cols, std::move(values));
}

std::vector<std::uint8_t> write_raw(std::span<const double> values, RawDtype dtype) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * dtype_width(dtype));
  for (double v : values) {
    if (dtype == RawDtype::f32le) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    } else {
      const std::uint16_t bits = Half::from_double(v).bits;
      out.push_back(static_cast<std::uint8_t>(bits));
      out.push_back(static_cast<std::uint8_t>(bits >> 8));
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace lpq
