// SPDX-License-Identifier: Apache-2.0

#pragma once

// Error-bounded 1D block codec ("GZC1") and a fixed-rate baseline.
//
// GZC1 wire format, little-endian throughout:
//
//   header (24 bytes)
//     [0,4)    magic "GZC1"
//     [4,12)   u64  element count n
//     [12,20)  f64  absolute error bound eb
//     [20,24)  u32  block length (always 32)
//   payload: ceil(n/32) blocks, the last one holding n mod 32 elements if
//   that is non-zero. A block of m elements is
//     u8   width w
//     w in [0,32]: f32 first element, then (m-1) zigzag codes of w bits
//                  each, packed LSB-first, ceil((m-1)*w/8) bytes
//     w == 255:    m raw f32 values
//
// Element j > 0 of a block is predicted by the reconstructed element j-1:
//   q_j     = round_half_away((x_j - recon_{j-1}) / (2 eb))
//   recon_j = f32(recon_{j-1} + q_j * 2 eb)
// so |recon_j - x_j| <= eb with no error propagation inside the block.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gzccl {

using Bytes = std::vector<std::uint8_t>;
using DataBuffer = std::vector<float>;

inline constexpr std::size_t kBlockLength = 32;
inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::uint8_t kRawWidth = 255;
inline constexpr std::size_t kMaxBlockBytes = 133;
inline constexpr char kMagic[4] = {'G', 'Z', 'C', '1'};

/// Absolute, strictly positive error bound in data units.
class ErrorBound {
 public:
  explicit ErrorBound(double eb) : value_(eb) {
    if (!(eb > 0.0) || !std::isfinite(eb)) {
      throw std::invalid_argument("error bound must be finite and > 0, got " +
                                  std::to_string(eb));
    }
  }
  double value() const noexcept { return value_; }

 private:
  double value_;
};

enum class DecodeFault {
  bad_magic,
  bad_header,
  truncated,
  bad_width,
  trailing_bytes,
};

inline const char* to_string(DecodeFault f) {
  switch (f) {
    case DecodeFault::bad_magic: return "bad magic";
    case DecodeFault::bad_header: return "bad header";
    case DecodeFault::truncated: return "truncated payload";
    case DecodeFault::bad_width: return "unknown width code";
    case DecodeFault::trailing_bytes: return "trailing bytes";
  }
  return "?";
}

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeFault fault, std::size_t offset)
      : std::runtime_error(std::string("decode error: ") + to_string(fault) +
                           " at byte " + std::to_string(offset)),
        fault_(fault),
        offset_(offset) {}
  DecodeFault fault() const noexcept { return fault_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  DecodeFault fault_;
  std::size_t offset_;
};

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_f32(Bytes& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}
inline float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }
inline double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

inline std::uint32_t zigzag_encode(std::int32_t v) {
  return (static_cast<std::uint32_t>(v) << 1) ^ static_cast<std::uint32_t>(v >> 31);
}
inline std::int32_t zigzag_decode(std::uint32_t v) {
  return static_cast<std::int32_t>((v >> 1) ^ (~(v & 1u) + 1u));
}

inline std::size_t packed_bytes(std::size_t count, unsigned width) {
  return (count * width + 7) / 8;
}

// Appends `codes` at `width` bits each, LSB-first.
inline void pack_bits(std::span<const std::uint32_t> codes, unsigned width, Bytes& out) {
  if (width == 0) return;
  std::uint64_t acc = 0;
  unsigned filled = 0;
  for (std::uint32_t c : codes) {
    acc |= static_cast<std::uint64_t>(c) << filled;
    filled += width;
    while (filled >= 8) {
      out.push_back(static_cast<std::uint8_t>(acc));
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) out.push_back(static_cast<std::uint8_t>(acc));
}

inline void unpack_bits(const std::uint8_t* src, std::size_t count, unsigned width,
                        std::uint32_t* codes) {
  if (width == 0) {
    std::fill(codes, codes + count, 0u);
    return;
  }
  const std::uint64_t mask = (width == 32) ? 0xFFFFFFFFull : ((1ull << width) - 1);
  std::uint64_t acc = 0;
  unsigned filled = 0;
  for (std::size_t k = 0; k < count; ++k) {
    while (filled < width) {
      acc |= static_cast<std::uint64_t>(*src++) << filled;
      filled += 8;
    }
    codes[k] = static_cast<std::uint32_t>(acc & mask);
    acc >>= width;
    filled -= width;
  }
}

inline void require_finite(std::span<const float> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw std::invalid_argument("non-finite value at index " + std::to_string(i));
    }
  }
}

// Reconstruction shared by encoder and decoder; both sides must evaluate the
// exact same expression.
inline float reconstruct(float prev, std::int32_t q, double two_eb) {
  return static_cast<float>(static_cast<double>(prev) + static_cast<double>(q) * two_eb);
}

inline void encode_block(std::span<const float> block, double eb, Bytes& out) {
  const double two_eb = 2.0 * eb;
  std::uint32_t codes[kBlockLength];
  std::uint32_t max_code = 0;
  bool raw = false;
  float recon = block[0];
  for (std::size_t j = 1; j < block.size(); ++j) {
    const double diff = static_cast<double>(block[j]) - static_cast<double>(recon);
    const double qd = std::round(diff / two_eb);
    if (!(std::fabs(qd) <= 1073741824.0)) {  // 2^30
      raw = true;
      break;
    }
    const auto q = static_cast<std::int32_t>(qd);
    const float next = reconstruct(recon, q, two_eb);
    if (std::fabs(static_cast<double>(next) - static_cast<double>(block[j])) > eb) {
      raw = true;
      break;
    }
    codes[j - 1] = zigzag_encode(q);
    max_code = std::max(max_code, codes[j - 1]);
    recon = next;
  }
  if (raw) {
    out.push_back(kRawWidth);
    for (float v : block) put_f32(out, v);
    return;
  }
  const auto width = static_cast<unsigned>(std::bit_width(max_code));
  out.push_back(static_cast<std::uint8_t>(width));
  put_f32(out, block[0]);
  pack_bits(std::span<const std::uint32_t>(codes, block.size() - 1), width, out);
}

}  // namespace detail

/// Header fields of a GZC1 blob.
struct BlobHeader {
  std::uint64_t count = 0;
  double eb = 0.0;
};

inline BlobHeader parse_header(std::span<const std::uint8_t> blob) {
  if (blob.size() < kHeaderSize) {
    if (blob.size() >= 4 && std::memcmp(blob.data(), kMagic, 4) != 0) {
      throw DecodeError(DecodeFault::bad_magic, 0);
    }
    throw DecodeError(DecodeFault::truncated, blob.size());
  }
  if (std::memcmp(blob.data(), kMagic, 4) != 0) throw DecodeError(DecodeFault::bad_magic, 0);
  BlobHeader h;
  h.count = detail::get_u64(blob.data() + 4);
  h.eb = detail::get_f64(blob.data() + 12);
  if (!(h.eb > 0.0) || !std::isfinite(h.eb)) throw DecodeError(DecodeFault::bad_header, 12);
  if (detail::get_u32(blob.data() + 20) != kBlockLength) {
    throw DecodeError(DecodeFault::bad_header, 20);
  }
  return h;
}

/// Worst-case GZC1 blob size for n elements.
inline std::size_t max_compressed_size(std::size_t n) {
  return kHeaderSize + ((n + kBlockLength - 1) / kBlockLength) * kMaxBlockBytes;
}

/// Appends the GZC1 encoding of `data` to `out`.
inline void compress_into(std::span<const float> data, ErrorBound eb, Bytes& out) {
  detail::require_finite(data);
  out.reserve(out.size() + max_compressed_size(data.size()));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  detail::put_u64(out, data.size());
  detail::put_f64(out, eb.value());
  detail::put_u32(out, static_cast<std::uint32_t>(kBlockLength));
  for (std::size_t start = 0; start < data.size(); start += kBlockLength) {
    const std::size_t m = std::min(kBlockLength, data.size() - start);
    detail::encode_block(data.subspan(start, m), eb.value(), out);
  }
}

inline Bytes compress(std::span<const float> data, ErrorBound eb) {
  Bytes out;
  compress_into(data, eb, out);
  return out;
}

/// Decodes a GZC1 blob into `out` (resized to the element count). Throws
/// DecodeError without touching the caller-visible size on malformed input.
inline void decompress_into(std::span<const std::uint8_t> blob, DataBuffer& out) {
  const BlobHeader h = parse_header(blob);
  const std::size_t n = static_cast<std::size_t>(h.count);
  const std::size_t nblocks = (n + kBlockLength - 1) / kBlockLength;
  // every block holds at least 5 bytes, so reject absurd counts before allocating
  if (nblocks > (blob.size() - kHeaderSize) / 5) {
    throw DecodeError(DecodeFault::truncated, blob.size());
  }
  const double two_eb = 2.0 * h.eb;
  DataBuffer result(n);
  std::uint32_t codes[kBlockLength];
  std::size_t pos = kHeaderSize;
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t start = b * kBlockLength;
    const std::size_t m = std::min(kBlockLength, n - start);
    if (pos >= blob.size()) throw DecodeError(DecodeFault::truncated, pos);
    const std::uint8_t w = blob[pos];
    if (w == kRawWidth) {
      if (blob.size() - pos - 1 < 4 * m) throw DecodeError(DecodeFault::truncated, pos);
      const std::uint8_t* p = blob.data() + pos + 1;
      for (std::size_t j = 0; j < m; ++j) result[start + j] = detail::get_f32(p + 4 * j);
      pos += 1 + 4 * m;
      continue;
    }
    if (w > 32) throw DecodeError(DecodeFault::bad_width, pos);
    const std::size_t need = 1 + 4 + detail::packed_bytes(m - 1, w);
    if (blob.size() - pos < need) throw DecodeError(DecodeFault::truncated, pos);
    const std::uint8_t* p = blob.data() + pos + 1;
    float recon = detail::get_f32(p);
    result[start] = recon;
    detail::unpack_bits(p + 4, m - 1, w, codes);
    for (std::size_t j = 1; j < m; ++j) {
      recon = detail::reconstruct(recon, detail::zigzag_decode(codes[j - 1]), two_eb);
      result[start + j] = recon;
    }
    pos += need;
  }
  if (pos != blob.size()) throw DecodeError(DecodeFault::trailing_bytes, pos);
  out = std::move(result);
}

inline DataBuffer decompress(std::span<const std::uint8_t> blob) {
  DataBuffer out;
  decompress_into(blob, out);
  return out;
}

/// Reusable output buffers for repeated codec calls. Views returned by
/// compress()/decompress() stay valid until the next call on the same
/// workspace. Not thread-safe; use one per caller.
class CodecWorkspace {
 public:
  std::span<const std::uint8_t> compress(std::span<const float> data, ErrorBound eb) {
    bytes_.clear();
    compress_into(data, eb, bytes_);
    return bytes_;
  }

  std::span<const float> decompress(std::span<const std::uint8_t> blob) {
    decompress_into(blob, values_);
    return values_;
  }

 private:
  Bytes bytes_;
  DataBuffer values_;
};

// ---------------------------------------------------------------------------
// Per-block compression (scatter / multi-stream emulation)

/// Sizes and offsets of independently decodable blobs packed back to back.
struct BlockTable {
  std::vector<std::uint64_t> sizes;
  std::vector<std::uint64_t> offsets;

  std::size_t count() const noexcept { return sizes.size(); }
  std::uint64_t total_bytes() const noexcept {
    return sizes.empty() ? 0 : offsets.back() + sizes.back();
  }

  static BlockTable from_sizes(std::vector<std::uint64_t> sizes) {
    BlockTable t;
    t.offsets.resize(sizes.size());
    std::uint64_t off = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      t.offsets[i] = off;
      off += sizes[i];
    }
    t.sizes = std::move(sizes);
    return t;
  }
};

struct PackedBlocks {
  Bytes payload;
  BlockTable table;
};

inline PackedBlocks compress_blocks(std::span<const float> data,
                                    std::span<const std::size_t> counts, ErrorBound eb) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total != data.size()) {
    throw std::invalid_argument("block counts sum to " + std::to_string(total) +
                                " but data has " + std::to_string(data.size()) +
                                " elements");
  }
  PackedBlocks packed;
  std::vector<std::uint64_t> sizes;
  sizes.reserve(counts.size());
  std::size_t start = 0;
  for (std::size_t c : counts) {
    const std::size_t before = packed.payload.size();
    compress_into(data.subspan(start, c), eb, packed.payload);
    sizes.push_back(packed.payload.size() - before);
    start += c;
  }
  packed.table = BlockTable::from_sizes(std::move(sizes));
  return packed;
}

/// The bytes of block `index`; throws std::out_of_range on a bad index or a
/// table that points past the payload.
inline std::span<const std::uint8_t> block_bytes(std::span<const std::uint8_t> payload,
                                                 const BlockTable& table, std::size_t index) {
  if (index >= table.count()) {
    throw std::out_of_range("block index " + std::to_string(index) + " >= " +
                            std::to_string(table.count()));
  }
  const std::uint64_t off = table.offsets[index];
  const std::uint64_t size = table.sizes[index];
  if (off > payload.size() || size > payload.size() - off) {
    throw std::out_of_range("block " + std::to_string(index) + " exceeds payload");
  }
  return payload.subspan(off, size);
}

inline DataBuffer decompress_block(std::span<const std::uint8_t> payload,
                                   const BlockTable& table, std::size_t index) {
  return decompress(block_bytes(payload, table, index));
}

// ---------------------------------------------------------------------------
// Fixed-rate baseline: uniform scalar quantization over [min, max].
//
//   header (17 bytes): u64 n, u8 bits, f32 min, f32 max
//   payload: n codes of `bits` bits, LSB-first, exactly ceil(n*bits/8) bytes

inline constexpr std::size_t kFixedRateHeaderSize = 17;

inline Bytes fixed_rate_compress(std::span<const float> data, unsigned bits) {
  if (bits < 1 || bits > 16) {
    throw std::invalid_argument("bits_per_value must be in [1,16], got " + std::to_string(bits));
  }
  detail::require_finite(data);
  float lo = 0.0f, hi = 0.0f;
  if (!data.empty()) {
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    lo = *mn;
    hi = *mx;
  }
  const double levels = static_cast<double>((1u << bits) - 1);
  const double range = static_cast<double>(hi) - static_cast<double>(lo);
  std::vector<std::uint32_t> codes(data.size(), 0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double t = (static_cast<double>(data[i]) - lo) / range * levels;
      codes[i] = static_cast<std::uint32_t>(std::clamp(std::round(t), 0.0, levels));
    }
  }
  Bytes out;
  out.reserve(kFixedRateHeaderSize + detail::packed_bytes(data.size(), bits));
  detail::put_u64(out, data.size());
  out.push_back(static_cast<std::uint8_t>(bits));
  detail::put_f32(out, lo);
  detail::put_f32(out, hi);
  detail::pack_bits(codes, bits, out);
  return out;
}

inline DataBuffer fixed_rate_decompress(std::span<const std::uint8_t> blob) {
  if (blob.size() < kFixedRateHeaderSize) throw DecodeError(DecodeFault::truncated, blob.size());
  const std::uint64_t n = detail::get_u64(blob.data());
  const unsigned bits = blob[8];
  if (bits < 1 || bits > 16) throw DecodeError(DecodeFault::bad_width, 8);
  const float lo = detail::get_f32(blob.data() + 9);
  const float hi = detail::get_f32(blob.data() + 13);
  if (n > (blob.size() - kFixedRateHeaderSize) * 8 / bits) {
    throw DecodeError(DecodeFault::truncated, blob.size());
  }
  const std::size_t payload = detail::packed_bytes(n, bits);
  if (blob.size() - kFixedRateHeaderSize != payload) {
    throw DecodeError(blob.size() - kFixedRateHeaderSize < payload ? DecodeFault::truncated
                                                                  : DecodeFault::trailing_bytes,
                      blob.size());
  }
  std::vector<std::uint32_t> codes(n);
  detail::unpack_bits(blob.data() + kFixedRateHeaderSize, n, bits, codes.data());
  const double levels = static_cast<double>((1u << bits) - 1);
  const double step = (static_cast<double>(hi) - static_cast<double>(lo)) / levels;
  DataBuffer out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(static_cast<double>(lo) + codes[i] * step);
  }
  return out;
}

/// Worst-case fixed-rate reconstruction error for a buffer with the given
/// range; data dependent, so no preset error bound can be honoured.
inline double fixed_rate_error_bound(double range, unsigned bits) {
  return range / (2.0 * static_cast<double>((1u << bits) - 1));
}

}  // namespace gzccl
