// SPDX-License-Identifier: Apache-2.0

#pragma once

// In-process multi-rank network with per-rank logical clocks.
//
// Messages travel over FIFO channels, one per ordered rank pair, framed
// with an 8-byte little-endian length prefix. Time is analytical: a send
// is stamped with a post time and arrives at
//   post + staging_time(len) + msg_time(len)
// and the sender only pays the staging cost. Receivers synchronize with
// wait_until(). Collectives drive ranks in lock-step rounds (every send of
// a round in rank order, then every receive in rank order), so runs are
// reproducible bit for bit.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "codec.hpp"
#include "cost_model.hpp"

namespace gzccl {

using RankId = int;

struct CommunicatorSpec {
  int size = 1;
  RankId root = 0;

  void validate() const {
    if (size < 1) throw std::invalid_argument("communicator size must be >= 1");
    if (root < 0 || root >= size) {
      throw std::invalid_argument("root " + std::to_string(root) + " out of range for " +
                                  std::to_string(size) + " ranks");
    }
  }
};

enum class Phase { compress, decompress, comm, reduce, staging, other };

struct OpCounters {
  std::uint64_t n_compress = 0;
  std::uint64_t n_decompress = 0;
  std::uint64_t n_messages = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t compress_in_bytes = 0;
  std::uint64_t compress_out_bytes = 0;
  double compress_s = 0.0;
  double decompress_s = 0.0;
  double comm_s = 0.0;
  double reduce_s = 0.0;
  double staging_s = 0.0;
  double other_s = 0.0;

  double& seconds(Phase p) {
    switch (p) {
      case Phase::compress: return compress_s;
      case Phase::decompress: return decompress_s;
      case Phase::comm: return comm_s;
      case Phase::reduce: return reduce_s;
      case Phase::staging: return staging_s;
      case Phase::other: return other_s;
    }
    return other_s;
  }

  double total_seconds() const {
    return compress_s + decompress_s + comm_s + reduce_s + staging_s + other_s;
  }

  OpCounters& operator+=(const OpCounters& o) {
    n_compress += o.n_compress;
    n_decompress += o.n_decompress;
    n_messages += o.n_messages;
    bytes_sent += o.bytes_sent;
    bytes_received += o.bytes_received;
    compress_in_bytes += o.compress_in_bytes;
    compress_out_bytes += o.compress_out_bytes;
    compress_s += o.compress_s;
    decompress_s += o.decompress_s;
    comm_s += o.comm_s;
    reduce_s += o.reduce_s;
    staging_s += o.staging_s;
    other_s += o.other_s;
    return *this;
  }
};

inline constexpr std::size_t kEnvelopePrefix = 8;

inline Bytes frame_envelope(std::span<const std::uint8_t> payload) {
  Bytes out;
  out.reserve(kEnvelopePrefix + payload.size());
  detail::put_u64(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline std::span<const std::uint8_t> open_envelope(std::span<const std::uint8_t> framed) {
  if (framed.size() < kEnvelopePrefix) throw std::runtime_error("envelope shorter than prefix");
  const std::uint64_t len = detail::get_u64(framed.data());
  if (len != framed.size() - kEnvelopePrefix) {
    throw std::runtime_error("envelope length prefix " + std::to_string(len) +
                             " does not match payload of " +
                             std::to_string(framed.size() - kEnvelopePrefix) + " bytes");
  }
  return framed.subspan(kEnvelopePrefix);
}

class DeadlockError : public std::runtime_error {
 public:
  DeadlockError(RankId waiting, RankId peer)
      : std::runtime_error("deadlock: rank " + std::to_string(waiting) +
                           " waits on rank " + std::to_string(peer) +
                           " but the channel is empty"),
        waiting_(waiting),
        peer_(peer) {}
  RankId waiting() const noexcept { return waiting_; }
  RankId peer() const noexcept { return peer_; }

 private:
  RankId waiting_;
  RankId peer_;
};

struct NetworkOptions {
  // Multiplier applied to every byte count before it reaches the cost
  // model; lets small buffers stand in for large nominal sizes.
  double size_scale = 1.0;
  bool record_trace = false;
};

struct TraceRecord {
  RankId from;
  RankId to;
  double post_time;
  double arrival;
  Bytes framed;
};

struct Received {
  Bytes payload;
  double arrival = 0.0;
};

class Network {
 public:
  explicit Network(CommunicatorSpec spec, CostModel cost = CostModel{},
                   NetworkOptions options = NetworkOptions{})
      : spec_(spec), cost_(cost), options_(options) {
    spec_.validate();
    if (!(options_.size_scale > 0.0)) throw std::invalid_argument("size_scale must be > 0");
    clocks_.assign(static_cast<std::size_t>(spec_.size), 0.0);
    counters_.assign(static_cast<std::size_t>(spec_.size), OpCounters{});
  }

  int size() const noexcept { return spec_.size; }
  RankId root() const noexcept { return spec_.root; }
  const CommunicatorSpec& spec() const noexcept { return spec_; }
  const CostModel& cost() const noexcept { return cost_; }
  const NetworkOptions& options() const noexcept { return options_; }

  std::size_t channel_count() const noexcept {
    const auto n = static_cast<std::size_t>(spec_.size);
    return n * (n - 1);
  }

  /// Bytes as seen by the cost model.
  double scaled(double bytes) const noexcept { return bytes * options_.size_scale; }

  double clock(RankId r) const { return clocks_.at(index(r)); }
  const OpCounters& counters(RankId r) const { return counters_.at(index(r)); }
  OpCounters& counters(RankId r) { return counters_.at(index(r)); }
  const std::vector<OpCounters>& all_counters() const noexcept { return counters_; }

  double makespan() const {
    return clocks_.empty() ? 0.0 : *std::max_element(clocks_.begin(), clocks_.end());
  }

  void advance(RankId r, Phase phase, double seconds) {
    if (seconds < 0.0) throw std::invalid_argument("negative time advance");
    clocks_[index(r)] += seconds;
    counters_[index(r)].seconds(phase) += seconds;
  }

  /// Blocks rank `r` until time `t`; any wait is communication time.
  void wait_until(RankId r, double t) {
    const double now = clocks_[index(r)];
    if (t > now) advance(r, Phase::comm, t - now);
  }

  void send(RankId from, RankId to, std::span<const std::uint8_t> payload) {
    send(from, to, payload, clock(from));
  }

  /// Non-blocking send stamped at `post_time`; the sender's clock moves by
  /// the staging cost only.
  void send(RankId from, RankId to, std::span<const std::uint8_t> payload, double post_time) {
    check_pair(from, to);
    Bytes framed = frame_envelope(payload);
    const double nominal = scaled(static_cast<double>(framed.size()));
    const double staging = cost_.staging_time(nominal);
    const double arrival = post_time + staging + cost_.msg_time(nominal);
    advance(from, Phase::staging, staging);
    auto& c = counters_[index(from)];
    ++c.n_messages;
    c.bytes_sent += framed.size();
    if (options_.record_trace) trace_.push_back({from, to, post_time, arrival, framed});
    channels_[key(from, to)].push_back(Pending{std::move(framed), arrival});
  }

  /// Oldest undelivered message from `from` to `at`. Does not move the
  /// receiver's clock; call wait_until(at, arrival) for that.
  Received recv(RankId at, RankId from) {
    check_pair(from, at);
    auto it = channels_.find(key(from, at));
    if (it == channels_.end() || it->second.empty()) throw DeadlockError(at, from);
    Pending msg = std::move(it->second.front());
    it->second.pop_front();
    counters_[index(at)].bytes_received += msg.framed.size();
    auto body = open_envelope(msg.framed);
    return Received{Bytes(body.begin(), body.end()), msg.arrival};
  }

  bool all_channels_empty() const {
    return std::all_of(channels_.begin(), channels_.end(),
                       [](const auto& kv) { return kv.second.empty(); });
  }

  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }

  /// Raw dump: per message u32 from, u32 to, then the framed bytes.
  void write_trace(std::ostream& os) const {
    for (const auto& rec : trace_) {
      Bytes head;
      detail::put_u32(head, static_cast<std::uint32_t>(rec.from));
      detail::put_u32(head, static_cast<std::uint32_t>(rec.to));
      os.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
      os.write(reinterpret_cast<const char*>(rec.framed.data()),
               static_cast<std::streamsize>(rec.framed.size()));
    }
  }

 private:
  struct Pending {
    Bytes framed;
    double arrival;
  };

  std::size_t index(RankId r) const {
    if (r < 0 || r >= spec_.size) {
      throw std::out_of_range("rank " + std::to_string(r) + " out of range");
    }
    return static_cast<std::size_t>(r);
  }

  void check_pair(RankId from, RankId to) const {
    index(from);
    index(to);
    if (from == to) throw std::invalid_argument("send to self");
  }

  std::uint64_t key(RankId from, RankId to) const {
    return static_cast<std::uint64_t>(from) * static_cast<std::uint64_t>(spec_.size) +
           static_cast<std::uint64_t>(to);
  }

  CommunicatorSpec spec_;
  CostModel cost_;
  NetworkOptions options_;
  std::vector<double> clocks_;
  std::vector<OpCounters> counters_;
  std::unordered_map<std::uint64_t, std::deque<Pending>> channels_;
  std::vector<TraceRecord> trace_;
};

}  // namespace gzccl
