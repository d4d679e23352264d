// SPDX-License-Identifier: Apache-2.0

#pragma once

// Compression-enabled collectives over simnet, templated on the payload
// codec so each algorithm has a lossless twin with the identical schedule.
//
//   ring_reduce_scatter   N-1 compress, N-1 decompress per rank
//   ring_allgather        owner compresses once, bytes are forwarded as is
//   ring_allreduce        reduce-scatter followed by allgather
//   rd_allreduce          whole-buffer recursive doubling with remainder fold
//   binomial_scatter      per-block compression at the root, tree forwarding
//   cprp2p_allgather      baseline that recompresses at every hop

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codec.hpp"
#include "cost_model.hpp"
#include "simnet.hpp"

namespace gzccl {

// ---------------------------------------------------------------------------
// Payload codecs

template <class C>
concept PayloadCodec = requires(const C& c, std::span<const float> x,
                                std::span<const std::uint8_t> b, DataBuffer& out) {
  { c.encode(x) } -> std::same_as<Bytes>;
  c.decode(b, out);
  { C::lossless } -> std::convertible_to<bool>;
};

struct EbzCodec {
  static constexpr bool lossless = false;
  ErrorBound eb;

  Bytes encode(std::span<const float> x) const { return compress(x, eb); }
  void decode(std::span<const std::uint8_t> b, DataBuffer& out) const { decompress_into(b, out); }
};

struct FixedRateCodec {
  static constexpr bool lossless = false;
  unsigned bits = 16;

  Bytes encode(std::span<const float> x) const { return fixed_rate_compress(x, bits); }
  void decode(std::span<const std::uint8_t> b, DataBuffer& out) const {
    out = fixed_rate_decompress(b);
  }
};

/// Raw little-endian binary32; no kernels are charged for it.
struct LosslessCodec {
  static constexpr bool lossless = true;

  Bytes encode(std::span<const float> x) const {
    Bytes out;
    out.reserve(4 * x.size());
    for (float v : x) detail::put_f32(out, v);
    return out;
  }
  void decode(std::span<const std::uint8_t> b, DataBuffer& out) const {
    if (b.size() % 4 != 0) throw std::runtime_error("raw payload not a multiple of 4 bytes");
    out.resize(b.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::get_f32(b.data() + 4 * i);
  }
};

// ---------------------------------------------------------------------------
// Reduction

enum class ReduceOp { sum, max };

inline void reduce_into(std::span<float> acc, std::span<const float> incoming, ReduceOp op) {
  if (acc.size() != incoming.size()) {
    throw std::runtime_error("reduction length mismatch: " + std::to_string(acc.size()) +
                             " vs " + std::to_string(incoming.size()));
  }
  if (op == ReduceOp::sum) {
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = acc[j] + incoming[j];
  } else {
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = std::max(acc[j], incoming[j]);
  }
}

// ---------------------------------------------------------------------------
// Layouts and plans

/// N chunks of ceil(n/N) elements, the trailing ones clipped (possibly empty).
class ChunkLayout {
 public:
  ChunkLayout(std::size_t n, int parts) : n_(n), parts_(parts) {
    if (parts < 1) throw std::invalid_argument("chunk layout needs >= 1 part");
    stride_ = (n + static_cast<std::size_t>(parts) - 1) / static_cast<std::size_t>(parts);
  }

  int parts() const noexcept { return parts_; }
  std::size_t begin(int c) const { return std::min(n_, static_cast<std::size_t>(c) * stride_); }
  std::size_t end(int c) const { return std::min(n_, static_cast<std::size_t>(c + 1) * stride_); }
  std::size_t length(int c) const { return end(c) - begin(c); }

  template <class T>
  std::span<T> chunk(std::span<T> whole, int c) const {
    return whole.subspan(begin(c), length(c));
  }

 private:
  std::size_t n_;
  int parts_;
  std::size_t stride_ = 0;
};

enum class RdRole { donor, absorber, direct };

/// Folding plan for recursive doubling on a non-power-of-two communicator:
/// the first 2r ranks pair up (even donates to odd), leaving pof2 ranks.
class RecursiveDoublingPlan {
 public:
  explicit RecursiveDoublingPlan(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("recursive doubling needs >= 1 rank");
    pof2_ = static_cast<int>(std::bit_floor(static_cast<unsigned>(n)));
    r_ = n - pof2_;
    steps_ = std::countr_zero(static_cast<unsigned>(pof2_));
  }

  int size() const noexcept { return n_; }
  int pof2() const noexcept { return pof2_; }
  int remainder() const noexcept { return r_; }
  int steps() const noexcept { return steps_; }

  RdRole role(RankId i) const {
    if (i < 2 * r_) return (i % 2 == 0) ? RdRole::donor : RdRole::absorber;
    return RdRole::direct;
  }

  /// Id within the power-of-two group, or -1 for donors.
  int remapped(RankId i) const {
    switch (role(i)) {
      case RdRole::donor: return -1;
      case RdRole::absorber: return i / 2;
      case RdRole::direct: return i - r_;
    }
    return -1;
  }

  RankId actual(int remapped_id) const {
    return remapped_id < r_ ? 2 * remapped_id + 1 : remapped_id + r_;
  }

  RankId partner(RankId i, int step) const { return actual(remapped(i) ^ (1 << step)); }

 private:
  int n_;
  int pof2_;
  int r_;
  int steps_;
};

// ---------------------------------------------------------------------------
// Shared step machinery

namespace detail {

// Charges codec work to a rank and returns the kernel time.
template <PayloadCodec Codec>
class CodecOps {
 public:
  CodecOps(Network& net, const Codec& codec) : net_(net), codec_(codec) {}

  Bytes encode(RankId r, std::span<const float> x, double& seconds) {
    Bytes out = codec_.encode(x);
    if constexpr (!Codec::lossless) {
      auto& c = net_.counters(r);
      ++c.n_compress;
      c.compress_in_bytes += 4 * x.size();
      c.compress_out_bytes += out.size();
      seconds += net_.cost().kernel_time(net_.scaled(4.0 * x.size()), KernelKind::compress);
    }
    return out;
  }

  DataBuffer decode(RankId r, std::span<const std::uint8_t> b, double& seconds) {
    DataBuffer out;
    codec_.decode(b, out);
    if constexpr (!Codec::lossless) {
      ++net_.counters(r).n_decompress;
      seconds += net_.cost().kernel_time(net_.scaled(4.0 * out.size()), KernelKind::decompress);
    }
    return out;
  }

  double reduce(std::span<float> acc, std::span<const float> in, ReduceOp op) {
    reduce_into(acc, in, op);
    return net_.cost().kernel_time(net_.scaled(4.0 * acc.size()), KernelKind::reduce);
  }

  Network& net() { return net_; }

 private:
  Network& net_;
  const Codec& codec_;
};

// One lock-step round. Per rank: begin() with the pre-send compute, any
// sends, receives, then end() with the post-receive compute. With overlap
// the send is posted at the round start and the rank finishes at
// max(start + compute, arrival); without it the send waits for compression
// and decompress/reduce wait for the arrival.
class Round {
 public:
  explicit Round(Network& net)
      : net_(net),
        start_(static_cast<std::size_t>(net.size()), 0.0),
        pending_(static_cast<std::size_t>(net.size()), 0.0) {}

  void begin(RankId r, double compress_s) {
    start_[idx(r)] = net_.clock(r);
    if (overlap()) {
      pending_[idx(r)] = compress_s;
    } else {
      net_.advance(r, Phase::compress, compress_s);
    }
  }

  void send(RankId from, RankId to, std::span<const std::uint8_t> payload) {
    net_.send(from, to, payload, overlap() ? start_[idx(from)] : net_.clock(from));
  }

  void end(RankId r, double decompress_s, double reduce_s, double arrival) {
    if (overlap()) {
      net_.advance(r, Phase::compress, pending_[idx(r)]);
      net_.advance(r, Phase::decompress, decompress_s);
      net_.advance(r, Phase::reduce, reduce_s);
      net_.wait_until(r, arrival);
    } else {
      net_.wait_until(r, arrival);
      net_.advance(r, Phase::decompress, decompress_s);
      net_.advance(r, Phase::reduce, reduce_s);
    }
  }

 private:
  bool overlap() const { return net_.cost().params().overlap; }
  static std::size_t idx(RankId r) { return static_cast<std::size_t>(r); }

  Network& net_;
  std::vector<double> start_;
  std::vector<double> pending_;
};

inline constexpr double kNever = -1.0;

inline void require_ranks(const Network& net, std::size_t inputs) {
  if (inputs != static_cast<std::size_t>(net.size())) {
    throw std::invalid_argument("shape mismatch: " + std::to_string(inputs) +
                                " input buffers for " + std::to_string(net.size()) + " ranks");
  }
}

inline std::size_t require_equal_lengths(const std::vector<DataBuffer>& in) {
  for (const auto& b : in) {
    if (b.size() != in.front().size()) {
      throw std::invalid_argument("shape mismatch: ranks hold buffers of different lengths");
    }
  }
  return in.empty() ? 0 : in.front().size();
}

inline int mod(int a, int n) { return ((a % n) + n) % n; }

// Ring allgather over chunk storage where rank i starts with chunk
// (i + shift) mod N in chunks[i][...]. Only the owner compresses; received
// bytes are decompressed locally and forwarded unchanged.
template <PayloadCodec Codec>
void ring_allgather_chunks(Network& net, const Codec& codec,
                           std::vector<std::vector<DataBuffer>>& chunks, int shift) {
  const int n = net.size();
  if (n == 1) return;
  CodecOps<Codec> ops(net, codec);
  std::vector<Bytes> outgoing(static_cast<std::size_t>(n));
  for (int s = 0; s < n - 1; ++s) {
    Round round(net);
    for (int i = 0; i < n; ++i) {
      double kc = 0.0;
      if (s == 0) {
        const int own = mod(i + shift, n);
        outgoing[i] = ops.encode(i, chunks[i][own], kc);
      }
      round.begin(i, kc);
      round.send(i, mod(i + 1, n), outgoing[i]);
    }
    for (int i = 0; i < n; ++i) {
      Received msg = net.recv(i, mod(i - 1, n));
      const int c = mod(i + shift - s - 1, n);
      double kd = 0.0;
      chunks[i][c] = ops.decode(i, msg.payload, kd);
      outgoing[i] = std::move(msg.payload);
      round.end(i, kd, 0.0, msg.arrival);
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Collectives. Inputs are indexed by rank; outputs likewise.

/// Rank i ends owning fully reduced chunk (i+1) mod N of the ChunkLayout.
template <PayloadCodec Codec>
std::vector<DataBuffer> ring_reduce_scatter(Network& net, const Codec& codec,
                                            std::vector<DataBuffer> inputs,
                                            ReduceOp op = ReduceOp::sum) {
  detail::require_ranks(net, inputs.size());
  const std::size_t len = detail::require_equal_lengths(inputs);
  const int n = net.size();
  const ChunkLayout layout(len, n);
  detail::CodecOps<Codec> ops(net, codec);
  for (int s = 0; s < n - 1; ++s) {
    detail::Round round(net);
    for (int i = 0; i < n; ++i) {
      const int c = detail::mod(i - s, n);
      double kc = 0.0;
      Bytes payload = ops.encode(i, layout.chunk(std::span<const float>(inputs[i]), c), kc);
      round.begin(i, kc);
      round.send(i, detail::mod(i + 1, n), payload);
    }
    for (int i = 0; i < n; ++i) {
      Received msg = net.recv(i, detail::mod(i - 1, n));
      const int c = detail::mod(i - s - 1, n);
      double kd = 0.0;
      DataBuffer incoming = ops.decode(i, msg.payload, kd);
      const double kr = ops.reduce(layout.chunk(std::span<float>(inputs[i]), c), incoming, op);
      round.end(i, kd, kr, msg.arrival);
    }
  }
  std::vector<DataBuffer> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto mine = layout.chunk(std::span<const float>(inputs[i]), detail::mod(i + 1, n));
    out[i].assign(mine.begin(), mine.end());
  }
  return out;
}

/// Allgather(v): chunks may differ in length; outputs are the rank-order
/// concatenation.
template <PayloadCodec Codec>
std::vector<DataBuffer> ring_allgather(Network& net, const Codec& codec,
                                       const std::vector<DataBuffer>& inputs) {
  detail::require_ranks(net, inputs.size());
  const int n = net.size();
  std::vector<std::vector<DataBuffer>> chunks(static_cast<std::size_t>(n),
                                              std::vector<DataBuffer>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) chunks[i][i] = inputs[i];
  detail::ring_allgather_chunks(net, codec, chunks, 0);
  std::vector<DataBuffer> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (const auto& c : chunks[i]) out[i].insert(out[i].end(), c.begin(), c.end());
  }
  return out;
}

template <PayloadCodec Codec>
std::vector<DataBuffer> ring_allreduce(Network& net, const Codec& codec,
                                       std::vector<DataBuffer> inputs,
                                       ReduceOp op = ReduceOp::sum) {
  detail::require_ranks(net, inputs.size());
  const std::size_t len = detail::require_equal_lengths(inputs);
  const int n = net.size();
  if (n == 1) return inputs;
  std::vector<DataBuffer> owned = ring_reduce_scatter(net, codec, std::move(inputs), op);
  std::vector<std::vector<DataBuffer>> chunks(static_cast<std::size_t>(n),
                                              std::vector<DataBuffer>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) chunks[i][detail::mod(i + 1, n)] = std::move(owned[i]);
  detail::ring_allgather_chunks(net, codec, chunks, 1);
  std::vector<DataBuffer> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[i].reserve(len);
    for (const auto& c : chunks[i]) out[i].insert(out[i].end(), c.begin(), c.end());
  }
  return out;
}

/// Recursive-doubling allreduce exchanging whole buffers. Non-power-of-two
/// communicators fold donors into absorbers first and get the result back
/// (compressed) at the end.
template <PayloadCodec Codec>
std::vector<DataBuffer> rd_allreduce(Network& net, const Codec& codec,
                                     std::vector<DataBuffer> inputs,
                                     ReduceOp op = ReduceOp::sum) {
  detail::require_ranks(net, inputs.size());
  detail::require_equal_lengths(inputs);
  const int n = net.size();
  const RecursiveDoublingPlan plan(n);
  detail::CodecOps<Codec> ops(net, codec);

  if (plan.remainder() > 0) {
    detail::Round round(net);
    for (int i = 0; i < n; ++i) {
      if (plan.role(i) != RdRole::donor) continue;
      double kc = 0.0;
      Bytes payload = ops.encode(i, inputs[i], kc);
      round.begin(i, kc);
      round.send(i, i + 1, payload);
      round.end(i, 0.0, 0.0, detail::kNever);
    }
    for (int i = 0; i < n; ++i) {
      if (plan.role(i) != RdRole::absorber) continue;
      round.begin(i, 0.0);
      Received msg = net.recv(i, i - 1);
      double kd = 0.0;
      DataBuffer incoming = ops.decode(i, msg.payload, kd);
      const double kr = ops.reduce(inputs[i], incoming, op);
      round.end(i, kd, kr, msg.arrival);
    }
  }

  for (int step = 0; step < plan.steps(); ++step) {
    detail::Round round(net);
    for (int i = 0; i < n; ++i) {
      if (plan.role(i) == RdRole::donor) continue;
      double kc = 0.0;
      Bytes payload = ops.encode(i, inputs[i], kc);
      round.begin(i, kc);
      round.send(i, plan.partner(i, step), payload);
    }
    for (int i = 0; i < n; ++i) {
      if (plan.role(i) == RdRole::donor) continue;
      Received msg = net.recv(i, plan.partner(i, step));
      double kd = 0.0;
      DataBuffer incoming = ops.decode(i, msg.payload, kd);
      const double kr = ops.reduce(inputs[i], incoming, op);
      round.end(i, kd, kr, msg.arrival);
    }
  }

  if (plan.remainder() > 0) {
    detail::Round round(net);
    for (int i = 0; i < n; ++i) {
      if (plan.role(i) != RdRole::absorber) continue;
      double kc = 0.0;
      Bytes payload = ops.encode(i, inputs[i], kc);
      round.begin(i, kc);
      round.send(i, i - 1, payload);
      round.end(i, 0.0, 0.0, detail::kNever);
    }
    for (int i = 0; i < n; ++i) {
      if (plan.role(i) != RdRole::donor) continue;
      round.begin(i, 0.0);
      Received msg = net.recv(i, i + 1);
      double kd = 0.0;
      inputs[i] = ops.decode(i, msg.payload, kd);
      round.end(i, kd, 0.0, msg.arrival);
    }
  }
  return inputs;
}

/// Ring allgather that decompresses and recompresses at every hop; a chunk
/// that travelled h hops carries up to h compression errors.
template <PayloadCodec Codec>
std::vector<DataBuffer> cprp2p_allgather(Network& net, const Codec& codec,
                                         const std::vector<DataBuffer>& inputs) {
  detail::require_ranks(net, inputs.size());
  const int n = net.size();
  std::vector<std::vector<DataBuffer>> chunks(static_cast<std::size_t>(n),
                                              std::vector<DataBuffer>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) chunks[i][i] = inputs[i];
  detail::CodecOps<Codec> ops(net, codec);
  for (int s = 0; s < n - 1; ++s) {
    detail::Round round(net);
    for (int i = 0; i < n; ++i) {
      double kc = 0.0;
      Bytes payload = ops.encode(i, chunks[i][detail::mod(i - s, n)], kc);
      round.begin(i, kc);
      round.send(i, detail::mod(i + 1, n), payload);
    }
    for (int i = 0; i < n; ++i) {
      Received msg = net.recv(i, detail::mod(i - 1, n));
      double kd = 0.0;
      chunks[i][detail::mod(i - s - 1, n)] = ops.decode(i, msg.payload, kd);
      round.end(i, kd, 0.0, msg.arrival);
    }
  }
  std::vector<DataBuffer> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (const auto& c : chunks[i]) out[i].insert(out[i].end(), c.begin(), c.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scatter

namespace detail {

// Message: u64 first block, u64 block count, u64 N, N x u64 block sizes,
// then the packed bytes of blocks [first, first + count).
inline Bytes encode_scatter_message(const BlockTable& table, std::size_t first,
                                    std::size_t count, std::span<const std::uint8_t> payload) {
  Bytes out;
  put_u64(out, first);
  put_u64(out, count);
  put_u64(out, table.count());
  for (auto s : table.sizes) put_u64(out, s);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

struct ScatterMessage {
  std::size_t first = 0;
  std::size_t count = 0;
  BlockTable table;
  std::span<const std::uint8_t> bytes;  // blocks [first, first + count)
};

inline ScatterMessage decode_scatter_message(std::span<const std::uint8_t> msg) {
  if (msg.size() < 24) throw std::runtime_error("scatter message too short");
  ScatterMessage m;
  m.first = get_u64(msg.data());
  m.count = get_u64(msg.data() + 8);
  const std::uint64_t nb = get_u64(msg.data() + 16);
  if (nb > (msg.size() - 24) / 8) throw std::runtime_error("scatter table truncated");
  std::vector<std::uint64_t> sizes(nb);
  for (std::uint64_t k = 0; k < nb; ++k) sizes[k] = get_u64(msg.data() + 24 + 8 * k);
  m.table = BlockTable::from_sizes(std::move(sizes));
  if (m.first + m.count > nb) throw std::runtime_error("scatter block range out of table");
  m.bytes = msg.subspan(24 + 8 * nb);
  const std::uint64_t base = m.table.offsets[m.first];
  const std::uint64_t span_bytes = (m.count == 0)
      ? 0 : m.table.offsets[m.first + m.count - 1] + m.table.sizes[m.first + m.count - 1] - base;
  if (m.bytes.size() != span_bytes) throw std::runtime_error("scatter payload size mismatch");
  return m;
}

// Byte range of blocks [first, first + count) within a range starting at
// block `base`.
inline std::span<const std::uint8_t> block_range(const BlockTable& t, std::span<const std::uint8_t> bytes,
                                                 std::size_t base, std::size_t first,
                                                 std::size_t count) {
  if (count == 0) return {};
  const std::uint64_t off = t.offsets[first] - t.offsets[base];
  const std::uint64_t end = t.offsets[first + count - 1] + t.sizes[first + count - 1] - t.offsets[base];
  return bytes.subspan(off, end - off);
}

}  // namespace detail

/// Binomial-tree Scatter(v). Blocks are compressed individually at the root
/// in relative-rank order (block k belongs to rank (root + k) mod N), packed
/// contiguously, and subtrees receive contiguous byte ranges that are
/// forwarded without recompression. The root keeps its own block verbatim.
template <PayloadCodec Codec>
std::vector<DataBuffer> binomial_scatter(Network& net, const Codec& codec,
                                         std::span<const float> root_data,
                                         std::span<const std::size_t> counts) {
  const int n = net.size();
  const RankId root = net.root();
  if (counts.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("scatter counts: " + std::to_string(counts.size()) +
                                " entries for " + std::to_string(n) + " ranks");
  }
  std::vector<std::size_t> displ(static_cast<std::size_t>(n), 0);
  std::size_t total = 0;
  for (int i = 0; i < n; ++i) {
    displ[i] = total;
    total += counts[i];
  }
  if (total != root_data.size()) {
    throw std::invalid_argument("scatter counts sum to " + std::to_string(total) +
                                " but root holds " + std::to_string(root_data.size()));
  }
  auto actual = [&](int rel) { return (root + rel) % n; };

  std::vector<DataBuffer> out(static_cast<std::size_t>(n));
  const auto root_block = root_data.subspan(displ[root], counts[root]);
  out[root].assign(root_block.begin(), root_block.end());
  if (n == 1) return out;

  // root: compress every block (one multi-stream launch), build table, pack
  Bytes packed;
  std::vector<std::uint64_t> sizes;
  std::vector<double> kernel_bytes;
  for (int k = 0; k < n; ++k) {
    const int r = actual(k);
    const Bytes blob = codec.encode(root_data.subspan(displ[r], counts[r]));
    sizes.push_back(blob.size());
    packed.insert(packed.end(), blob.begin(), blob.end());
    kernel_bytes.push_back(net.scaled(4.0 * counts[r]));
    if constexpr (!Codec::lossless) {
      auto& c = net.counters(root);
      ++c.n_compress;
      c.compress_in_bytes += 4 * counts[r];
      c.compress_out_bytes += blob.size();
    }
  }
  const BlockTable table = BlockTable::from_sizes(std::move(sizes));
  if constexpr (!Codec::lossless) {
    net.advance(root, Phase::compress,
                net.cost().multi_launch_time(kernel_bytes, KernelKind::compress));
  }

  // Parents always have a smaller relative rank, so visiting relative ranks
  // in increasing order delivers every message before it is received.
  std::vector<Bytes> held(static_cast<std::size_t>(n));
  for (int rel = 0; rel < n; ++rel) {
    const RankId me = actual(rel);
    std::span<const std::uint8_t> mine;
    BlockTable tbl;
    int extent = n;  // blocks [rel, rel + extent) held here
    if (rel == 0) {
      mine = packed;
      tbl = table;
    } else {
      const int parent_rel = rel & (rel - 1);
      Received msg = net.recv(me, actual(parent_rel));
      net.wait_until(me, msg.arrival);
      held[rel] = std::move(msg.payload);
      detail::ScatterMessage m = detail::decode_scatter_message(held[rel]);
      if (m.first != static_cast<std::size_t>(rel)) throw std::runtime_error("scatter routing error");
      mine = m.bytes;
      tbl = std::move(m.table);
      extent = static_cast<int>(m.count);
    }
    // children: rel + mask for each mask below the lowest set bit of rel
    int lowbit = rel == 0 ? static_cast<int>(std::bit_ceil(static_cast<unsigned>(n))) : (rel & -rel);
    for (int mask = lowbit >> 1; mask > 0; mask >>= 1) {
      const int child = rel + mask;
      if (child >= n || mask >= extent) continue;
      const int cnt = std::min(mask, n - child);
      auto range = detail::block_range(tbl, mine, static_cast<std::size_t>(rel),
                                       static_cast<std::size_t>(child), static_cast<std::size_t>(cnt));
      net.send(me, actual(child), detail::encode_scatter_message(tbl, child, cnt, range));
    }
    if (rel != 0) {
      auto own = detail::block_range(tbl, mine, static_cast<std::size_t>(rel),
                                     static_cast<std::size_t>(rel), 1);
      codec.decode(own, out[me]);
      if constexpr (!Codec::lossless) {
        ++net.counters(me).n_decompress;
        net.advance(me, Phase::decompress,
                    net.cost().kernel_time(net.scaled(4.0 * out[me].size()), KernelKind::decompress));
      }
    }
  }
  return out;
}

}  // namespace gzccl
