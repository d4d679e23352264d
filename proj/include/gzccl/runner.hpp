// SPDX-License-Identifier: Apache-2.0

#pragma once

// Runs a named collective on a fresh simulated network, re-runs its
// lossless twin as the accuracy oracle, and assembles a CollectiveReport.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "codec.hpp"
#include "collectives.hpp"
#include "cost_model.hpp"
#include "metrics.hpp"
#include "simnet.hpp"

namespace gzccl {

enum class Algorithm {
  ring_allgather,
  ring_reduce_scatter,
  ring_allreduce,
  rd_allreduce,
  binomial_scatter,
  cprp2p_allgather,
};

enum class CodecKind { ebz, fixed_rate, none };

struct AlgorithmInfo {
  std::string_view id;
  Algorithm algorithm;
  bool lossless;
};

inline constexpr std::array<AlgorithmInfo, 15> kAlgorithms{{
    {"ring-allgather", Algorithm::ring_allgather, false},
    {"ring-reduce-scatter", Algorithm::ring_reduce_scatter, false},
    {"ring-allreduce", Algorithm::ring_allreduce, false},
    {"rd-allreduce", Algorithm::rd_allreduce, false},
    {"binomial-scatter", Algorithm::binomial_scatter, false},
    {"cprp2p-allgather", Algorithm::cprp2p_allgather, false},
    {"lossless-ring-allgather", Algorithm::ring_allgather, true},
    {"lossless-ring-reduce-scatter", Algorithm::ring_reduce_scatter, true},
    {"lossless-ring-allreduce", Algorithm::ring_allreduce, true},
    {"lossless-rd-allreduce", Algorithm::rd_allreduce, true},
    {"lossless-binomial-scatter", Algorithm::binomial_scatter, true},
    // short aliases
    {"lossless-allgather", Algorithm::ring_allgather, true},
    {"lossless-reduce-scatter", Algorithm::ring_reduce_scatter, true},
    {"lossless-allreduce", Algorithm::ring_allreduce, true},
    {"lossless-scatter", Algorithm::binomial_scatter, true},
}};

inline const AlgorithmInfo& lookup_algorithm(std::string_view id) {
  for (const auto& a : kAlgorithms) {
    if (a.id == id) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(id) + "'");
}

inline CodecKind parse_codec(std::string_view s) {
  if (s == "ebz") return CodecKind::ebz;
  if (s == "fixed-rate") return CodecKind::fixed_rate;
  if (s == "none") return CodecKind::none;
  throw std::invalid_argument("unknown codec '" + std::string(s) + "'");
}

inline std::string_view to_string(CodecKind c) {
  switch (c) {
    case CodecKind::ebz: return "ebz";
    case CodecKind::fixed_rate: return "fixed-rate";
    case CodecKind::none: return "none";
  }
  return "?";
}

/// Worst-case per-element error of a compressed collective in exact
/// arithmetic (sum reduction), in units of eb.
inline double error_budget_factor(Algorithm a, int n) {
  switch (a) {
    case Algorithm::ring_allgather: return n > 1 ? 1.0 : 0.0;
    case Algorithm::ring_reduce_scatter: return n - 1;
    case Algorithm::ring_allreduce: return n > 1 ? n : 0.0;
    case Algorithm::rd_allreduce:
      if (n == 1) return 0.0;
      return std::has_single_bit(static_cast<unsigned>(n)) ? n - 1 : 2.0 * n;
    case Algorithm::binomial_scatter: return n > 1 ? 1.0 : 0.0;
    case Algorithm::cprp2p_allgather: return n - 1;
  }
  return 0.0;
}

/// Float32 summation rounding the oracle comparison has to tolerate on top
/// of the exact-arithmetic budget: one ulp of the largest magnitude per
/// reduction hop. Zero for collectives that never add.
inline double rounding_allowance(Algorithm a, int n, ReduceOp op, double max_magnitude) {
  const bool reduces = a == Algorithm::ring_reduce_scatter || a == Algorithm::ring_allreduce ||
                       a == Algorithm::rd_allreduce;
  if (!reduces || op != ReduceOp::sum || n < 2) return 0.0;
  const float m = static_cast<float>(max_magnitude);
  const double ulp =
      static_cast<double>(std::nextafter(m, std::numeric_limits<float>::infinity()) - m);
  return (n - 1) * ulp;
}

struct RunSpec {
  std::string algorithm = "ring-allreduce";
  CodecKind codec = CodecKind::ebz;
  double eb = 1e-4;
  unsigned fixed_rate_bits = 16;
  ReduceOp op = ReduceOp::sum;
  RankId root = 0;
  std::vector<std::size_t> counts;  // scatter only; empty = even split
  CostParams cost{};
  NetworkOptions network{};
};

struct PhaseBreakdown {
  double cmpr = 0.0;
  double comm = 0.0;
  double redu = 0.0;
  double others = 0.0;
};

struct CollectiveReport {
  std::string algorithm;
  std::string codec;
  int ranks = 0;
  std::size_t elements = 0;  // input elements per rank (root data for scatter)
  double eb = 0.0;
  OpCounters counters;  // summed over ranks
  std::vector<OpCounters> per_rank;
  std::vector<double> per_rank_clock;
  AccuracyStats accuracy;
  double error_budget = 0.0;
  double compression_ratio = 1.0;
  double makespan_s = 0.0;
  PhaseBreakdown breakdown_pct;
};

struct RunResult {
  std::vector<DataBuffer> outputs;
  std::vector<DataBuffer> oracle;
  CollectiveReport report;
};

namespace detail {

template <PayloadCodec Codec>
std::vector<DataBuffer> dispatch(Algorithm a, Network& net, const Codec& codec,
                                 const std::vector<DataBuffer>& inputs, const RunSpec& spec,
                                 std::span<const std::size_t> counts) {
  switch (a) {
    case Algorithm::ring_allgather: return ring_allgather(net, codec, inputs);
    case Algorithm::ring_reduce_scatter: return ring_reduce_scatter(net, codec, inputs, spec.op);
    case Algorithm::ring_allreduce: return ring_allreduce(net, codec, inputs, spec.op);
    case Algorithm::rd_allreduce: return rd_allreduce(net, codec, inputs, spec.op);
    case Algorithm::binomial_scatter:
      return binomial_scatter(net, codec, inputs.at(static_cast<std::size_t>(net.root())), counts);
    case Algorithm::cprp2p_allgather: {
      if constexpr (Codec::lossless) {
        return ring_allgather(net, codec, inputs);
      } else {
        return cprp2p_allgather(net, codec, inputs);
      }
    }
  }
  throw std::logic_error("unhandled algorithm");
}

inline PhaseBreakdown breakdown(const OpCounters& c) {
  PhaseBreakdown b;
  const double total = c.total_seconds();
  if (!(total > 0.0)) {
    b.others = 100.0;
    return b;
  }
  b.cmpr = 100.0 * (c.compress_s + c.decompress_s) / total;
  b.comm = 100.0 * (c.comm_s + c.staging_s) / total;
  b.redu = 100.0 * c.reduce_s / total;
  b.others = 100.0 * c.other_s / total;
  return b;
}

inline DataBuffer concat(const std::vector<DataBuffer>& parts) {
  DataBuffer all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

}  // namespace detail

inline std::vector<std::size_t> even_counts(std::size_t total, int ranks) {
  const ChunkLayout layout(total, ranks);
  std::vector<std::size_t> counts(static_cast<std::size_t>(ranks));
  for (int i = 0; i < ranks; ++i) counts[i] = layout.length(i);
  return counts;
}

/// Runs `spec.algorithm` with one input buffer per rank (for scatter only
/// the root's buffer is used).
inline RunResult run_collective(const RunSpec& spec, const std::vector<DataBuffer>& inputs) {
  const AlgorithmInfo& info = lookup_algorithm(spec.algorithm);
  const int n = static_cast<int>(inputs.size());
  const CommunicatorSpec comm{n, spec.root};
  comm.validate();
  const CostModel cost(spec.cost);
  const bool lossless = info.lossless || spec.codec == CodecKind::none;

  std::vector<std::size_t> counts = spec.counts;
  if (info.algorithm == Algorithm::binomial_scatter && counts.empty()) {
    counts = even_counts(inputs[static_cast<std::size_t>(spec.root)].size(), n);
  }

  Network net(comm, cost, spec.network);
  RunResult result;
  if (lossless) {
    result.outputs = detail::dispatch(info.algorithm, net, LosslessCodec{}, inputs, spec, counts);
  } else if (spec.codec == CodecKind::ebz) {
    result.outputs = detail::dispatch(info.algorithm, net, EbzCodec{ErrorBound(spec.eb)}, inputs,
                                      spec, counts);
  } else {
    result.outputs = detail::dispatch(info.algorithm, net, FixedRateCodec{spec.fixed_rate_bits},
                                      inputs, spec, counts);
  }
  if (!net.all_channels_empty()) throw std::logic_error("collective left undelivered messages");

  if (lossless) {
    result.oracle = result.outputs;
  } else {
    Network oracle_net(comm, cost, spec.network);
    result.oracle = detail::dispatch(info.algorithm, oracle_net, LosslessCodec{}, inputs, spec, counts);
  }

  CollectiveReport& r = result.report;
  r.algorithm = std::string(info.id);
  r.codec = std::string(to_string(lossless ? CodecKind::none : spec.codec));
  r.ranks = n;
  r.elements = inputs[static_cast<std::size_t>(info.algorithm == Algorithm::binomial_scatter ? spec.root : 0)].size();
  r.eb = lossless ? 0.0 : spec.eb;
  r.per_rank = net.all_counters();
  for (int i = 0; i < n; ++i) {
    r.counters += r.per_rank[i];
    r.per_rank_clock.push_back(net.clock(i));
  }
  const DataBuffer out_all = detail::concat(result.outputs);
  const DataBuffer ref_all = detail::concat(result.oracle);
  r.accuracy = accuracy_stats(ref_all, out_all);
  r.error_budget = (lossless || spec.codec != CodecKind::ebz)
                       ? (lossless ? 0.0 : std::numeric_limits<double>::infinity())
                       : error_budget_factor(info.algorithm, n) * spec.eb;
  r.compression_ratio = r.counters.compress_out_bytes > 0
                            ? compression_ratio(static_cast<double>(r.counters.compress_in_bytes),
                                                static_cast<double>(r.counters.compress_out_bytes))
                            : 1.0;
  r.makespan_s = net.makespan();
  r.breakdown_pct = detail::breakdown(r.counters);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization. Non-finite numbers are written as the strings "inf",
// "-inf" or "nan" since JSON has no literal for them.

namespace detail {
inline nlohmann::json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::json counters_json(const OpCounters& c) {
  return nlohmann::json{{"n_compress", c.n_compress},
                        {"n_decompress", c.n_decompress},
                        {"n_messages", c.n_messages},
                        {"bytes_sent", c.bytes_sent},
                        {"bytes_received", c.bytes_received},
                        {"compress_in_bytes", c.compress_in_bytes},
                        {"compress_out_bytes", c.compress_out_bytes},
                        {"compress_s", c.compress_s},
                        {"decompress_s", c.decompress_s},
                        {"comm_s", c.comm_s},
                        {"reduce_s", c.reduce_s},
                        {"staging_s", c.staging_s},
                        {"other_s", c.other_s}};
}
}  // namespace detail

inline nlohmann::json to_json(const CollectiveReport& r) {
  nlohmann::json per_rank = nlohmann::json::array();
  for (std::size_t i = 0; i < r.per_rank.size(); ++i) {
    nlohmann::json e = detail::counters_json(r.per_rank[i]);
    e["rank"] = i;
    e["clock_s"] = r.per_rank_clock[i];
    per_rank.push_back(std::move(e));
  }
  return nlohmann::json{
      {"algorithm", r.algorithm},
      {"codec", r.codec},
      {"ranks", r.ranks},
      {"elements", r.elements},
      {"eb", r.eb},
      {"counters", detail::counters_json(r.counters)},
      {"per_rank", std::move(per_rank)},
      {"accuracy",
       {{"max_abs_err", detail::number(r.accuracy.max_abs_err)},
        {"mse", detail::number(r.accuracy.mse)},
        {"psnr", detail::number(r.accuracy.psnr)},
        {"mean_signed_err", detail::number(r.accuracy.mean_signed_err)}}},
      {"error_budget", detail::number(r.error_budget)},
      {"compression_ratio", detail::number(r.compression_ratio)},
      {"makespan_s", r.makespan_s},
      {"breakdown_pct",
       {{"cmpr", r.breakdown_pct.cmpr},
        {"comm", r.breakdown_pct.comm},
        {"redu", r.breakdown_pct.redu},
        {"others", r.breakdown_pct.others}}},
  };
}

inline constexpr std::string_view kReportCsvHeader =
    "algorithm,codec,ranks,elements,eb,n_compress,n_decompress,n_messages,bytes_sent,"
    "max_abs_err,mse,psnr,mean_signed_err,error_budget,compression_ratio,makespan_s,"
    "cmpr_pct,comm_pct,redu_pct,others_pct";

inline std::string to_csv_row(const CollectiveReport& r) {
  auto num = [](double v) { return detail::number(v).dump(); };
  auto unq = [](std::string s) {
    if (s.size() >= 2 && s.front() == '"') s = s.substr(1, s.size() - 2);
    return s;
  };
  std::ostringstream os;
  os << r.algorithm << ',' << r.codec << ',' << r.ranks << ',' << r.elements << ','
     << num(r.eb) << ',' << r.counters.n_compress << ',' << r.counters.n_decompress << ','
     << r.counters.n_messages << ',' << r.counters.bytes_sent << ','
     << unq(num(r.accuracy.max_abs_err)) << ',' << unq(num(r.accuracy.mse)) << ','
     << unq(num(r.accuracy.psnr)) << ',' << unq(num(r.accuracy.mean_signed_err)) << ','
     << unq(num(r.error_budget)) << ',' << unq(num(r.compression_ratio)) << ','
     << num(r.makespan_s) << ',' << num(r.breakdown_pct.cmpr) << ','
     << num(r.breakdown_pct.comm) << ',' << num(r.breakdown_pct.redu) << ','
     << num(r.breakdown_pct.others);
  return os.str();
}

}  // namespace gzccl
