// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numeric>

#include "gzccl/collectives.hpp"
#include "gzccl/runner.hpp"
#include "test_util.hpp"

namespace gzccl {
namespace {

using testing::ceil_chunk;
using testing::direct_concat;
using testing::direct_sum;
using testing::integer_inputs;
using testing::max_abs_diff;
using testing::uniform_inputs;

std::vector<DataBuffer> constant_rank_inputs(int n, std::size_t len) {
  std::vector<DataBuffer> in;
  for (int r = 0; r < n; ++r) in.emplace_back(len, static_cast<float>(r));
  return in;
}

void expect_counts(const Network& net, RankId r, std::uint64_t c, std::uint64_t d) {
  EXPECT_EQ(net.counters(r).n_compress, c) << "rank " << r << " of " << net.size();
  EXPECT_EQ(net.counters(r).n_decompress, d) << "rank " << r << " of " << net.size();
}

// ---------------------------------------------------------------------------

TEST(ChunkLayoutTest, CoversRangeInOrder) {
  for (std::size_t n : {0u, 1u, 7u, 64u, 1000u}) {
    for (int parts = 1; parts <= 9; ++parts) {
      const ChunkLayout l(n, parts);
      std::size_t next = 0;
      for (int c = 0; c < parts; ++c) {
        EXPECT_EQ(l.begin(c), next);
        EXPECT_GE(l.end(c), l.begin(c));
        next = l.end(c);
      }
      EXPECT_EQ(next, n);
    }
  }
}

TEST(RecursiveDoublingPlanTest, SixRanks) {
  const RecursiveDoublingPlan p(6);
  EXPECT_EQ(p.pof2(), 4);
  EXPECT_EQ(p.remainder(), 2);
  EXPECT_EQ(p.steps(), 2);
  EXPECT_EQ(p.role(0), RdRole::donor);
  EXPECT_EQ(p.role(2), RdRole::donor);
  EXPECT_EQ(p.role(1), RdRole::absorber);
  EXPECT_EQ(p.role(3), RdRole::absorber);
  EXPECT_EQ(p.role(4), RdRole::direct);
  EXPECT_EQ(p.role(5), RdRole::direct);
  EXPECT_EQ(p.remapped(1), 0);
  EXPECT_EQ(p.remapped(3), 1);
  EXPECT_EQ(p.remapped(4), 2);
  EXPECT_EQ(p.remapped(5), 3);
  EXPECT_EQ(p.remapped(0), -1);
}

TEST(RecursiveDoublingPlanTest, RemappedIdsAreAPermutation) {
  for (int n = 1; n <= 40; ++n) {
    const RecursiveDoublingPlan p(n);
    EXPECT_LE(p.pof2(), n);
    EXPECT_LT(n, 2 * p.pof2());
    std::vector<int> seen(static_cast<std::size_t>(p.pof2()), 0);
    for (int i = 0; i < n; ++i) {
      const int id = p.remapped(i);
      if (id < 0) continue;
      ASSERT_LT(id, p.pof2());
      ++seen[id];
      EXPECT_EQ(p.actual(id), i);
      for (int s = 0; s < p.steps(); ++s) EXPECT_EQ(p.partner(p.partner(i, s), s), i);
    }
    for (int k : seen) EXPECT_EQ(k, 1) << "n=" << n;
  }
}

// ---------------------------------------------------------------------------
// Op counts

TEST(OpCounts, AllAlgorithms) {
  const EbzCodec codec{ErrorBound(1e-4)};
  for (int n = 2; n <= 32; ++n) {
    const std::uint64_t N = static_cast<std::uint64_t>(n);
    const auto in = uniform_inputs(n, 96, static_cast<std::uint64_t>(n));
    {
      Network net(CommunicatorSpec{n, 0});
      ring_reduce_scatter(net, codec, in);
      for (int r = 0; r < n; ++r) expect_counts(net, r, N - 1, N - 1);
    }
    {
      Network net(CommunicatorSpec{n, 0});
      ring_allgather(net, codec, in);
      for (int r = 0; r < n; ++r) expect_counts(net, r, 1, N - 1);
    }
    {
      Network net(CommunicatorSpec{n, 0});
      ring_allreduce(net, codec, in);
      for (int r = 0; r < n; ++r) expect_counts(net, r, N, 2 * (N - 1));
    }
    {
      Network net(CommunicatorSpec{n, 0});
      cprp2p_allgather(net, codec, in);
      for (int r = 0; r < n; ++r) expect_counts(net, r, N - 1, N - 1);
    }
    {
      Network net(CommunicatorSpec{n, 0});
      rd_allreduce(net, codec, in);
      const RecursiveDoublingPlan plan(n);
      const auto k = static_cast<std::uint64_t>(plan.steps());
      for (int r = 0; r < n; ++r) {
        switch (plan.role(r)) {
          case RdRole::donor: expect_counts(net, r, 1, 1); break;
          case RdRole::absorber: expect_counts(net, r, k + 1, k + 1); break;
          case RdRole::direct: expect_counts(net, r, k, k); break;
        }
      }
      if (std::has_single_bit(static_cast<unsigned>(n))) {
        for (int r = 0; r < n; ++r) expect_counts(net, r, std::countr_zero(N), std::countr_zero(N));
      }
    }
    for (int root : {0, n - 1, n / 2}) {
      Network net(CommunicatorSpec{n, root});
      const DataBuffer all = direct_concat(in);
      const auto counts = even_counts(all.size(), n);
      binomial_scatter(net, codec, all, counts);
      for (int r = 0; r < n; ++r) {
        if (r == root) {
          expect_counts(net, r, N, 0);
        } else {
          expect_counts(net, r, 0, 1);
        }
      }
    }
  }
}

TEST(OpCounts, LosslessTwinsChargeNoCodecWork) {
  const auto in = uniform_inputs(5, 64, 2);
  Network net(CommunicatorSpec{5, 0});
  ring_allreduce(net, LosslessCodec{}, in);
  for (int r = 0; r < 5; ++r) {
    expect_counts(net, r, 0, 0);
    EXPECT_EQ(net.counters(r).compress_s, 0.0);
    EXPECT_EQ(net.counters(r).n_messages, 8u);
  }
}

// ---------------------------------------------------------------------------
// Worked examples

TEST(Examples, ReduceScatterConstantInputs) {
  Network net(CommunicatorSpec{4, 0});
  const auto out = ring_reduce_scatter(net, EbzCodec{ErrorBound(1e-3)}, constant_rank_inputs(4, 100));
  for (const auto& chunk : out) {
    EXPECT_EQ(chunk.size(), 25u);
    for (float v : chunk) EXPECT_LE(std::fabs(v - 6.0), 3e-3);
  }
}

TEST(Examples, RingAllreduceConstantInputs) {
  Network net(CommunicatorSpec{4, 0});
  const auto out = ring_allreduce(net, EbzCodec{ErrorBound(1e-3)}, constant_rank_inputs(4, 100));
  for (const auto& b : out) {
    ASSERT_EQ(b.size(), 100u);
    for (float v : b) EXPECT_LE(std::fabs(v - 6.0), 4e-3);
  }
}

TEST(Examples, RdAllreduceConstantInputs) {
  Network net(CommunicatorSpec{4, 0});
  const auto out = rd_allreduce(net, EbzCodec{ErrorBound(1e-3)}, constant_rank_inputs(4, 100));
  for (const auto& b : out) {
    for (float v : b) EXPECT_LE(std::fabs(v - 6.0), 3e-3);
  }
}

TEST(Examples, AllgatherThreeRanks) {
  const auto in = uniform_inputs(3, 500, 9);
  Network net(CommunicatorSpec{3, 0});
  const auto out = ring_allgather(net, EbzCodec{ErrorBound(1e-4)}, in);
  const DataBuffer expect = direct_concat(in);
  for (const auto& b : out) {
    ASSERT_EQ(b.size(), expect.size());
    EXPECT_LE(max_abs_diff(b, expect), 1e-4);
  }
}

TEST(Examples, ScatterSingleValues) {
  Network net(CommunicatorSpec{4, 0});
  const DataBuffer data{10, 11, 12, 13};
  const std::vector<std::size_t> counts{1, 1, 1, 1};
  const auto out = binomial_scatter(net, EbzCodec{ErrorBound(1e-3)}, data, counts);
  ASSERT_EQ(out[0].size(), 1u);
  EXPECT_EQ(out[0][0], 10.0f);
  for (int i = 1; i < 4; ++i) {
    ASSERT_EQ(out[i].size(), 1u);
    EXPECT_LE(std::fabs(out[i][0] - (10.0 + i)), 1e-3);
  }
}

TEST(Examples, ScatterVariableCounts) {
  const std::vector<std::size_t> counts{1, 2, 3, 2};
  const DataBuffer data = uniform_buffer(8, 4);
  for (int root = 0; root < 4; ++root) {
    Network net(CommunicatorSpec{4, root});
    const auto out = binomial_scatter(net, EbzCodec{ErrorBound(1e-4)}, data, counts);
    std::size_t off = 0;
    for (int r = 0; r < 4; ++r) {
      ASSERT_EQ(out[r].size(), counts[r]);
      for (std::size_t j = 0; j < counts[r]; ++j) {
        const double err = std::fabs(double(out[r][j]) - double(data[off + j]));
        if (r == root) {
          EXPECT_EQ(err, 0.0);
        } else {
          EXPECT_LE(err, 1e-4);
        }
      }
      off += counts[r];
    }
    EXPECT_TRUE(net.all_channels_empty());
  }
}

TEST(Examples, ScatterWithEmptyBlocks) {
  const std::vector<std::size_t> counts{0, 5, 0, 0, 3};
  const DataBuffer data = uniform_buffer(8, 6);
  Network net(CommunicatorSpec{5, 2});
  const auto out = binomial_scatter(net, EbzCodec{ErrorBound(1e-4)}, data, counts);
  EXPECT_TRUE(out[0].empty());
  EXPECT_LE(max_abs_diff(out[1], DataBuffer(data.begin(), data.begin() + 5)), 1e-4);
  EXPECT_LE(max_abs_diff(out[4], DataBuffer(data.begin() + 5, data.end())), 1e-4);
}

TEST(Examples, SingleRankIsIdentity) {
  const auto in = uniform_inputs(1, 50, 3);
  const EbzCodec codec{ErrorBound(1e-4)};
  {
    Network net(CommunicatorSpec{1, 0});
    EXPECT_EQ(ring_allreduce(net, codec, in)[0], in[0]);
    EXPECT_EQ(net.counters(0).n_messages, 0u);
  }
  {
    Network net(CommunicatorSpec{1, 0});
    EXPECT_EQ(rd_allreduce(net, codec, in)[0], in[0]);
    EXPECT_EQ(net.counters(0).n_messages, 0u);
  }
  {
    Network net(CommunicatorSpec{1, 0});
    const std::vector<std::size_t> counts{50};
    EXPECT_EQ(binomial_scatter(net, codec, in[0], counts)[0], in[0]);
    EXPECT_EQ(net.counters(0).n_messages, 0u);
  }
}

TEST(Examples, ShapeErrors) {
  const EbzCodec codec{ErrorBound(1e-4)};
  Network net(CommunicatorSpec{3, 0});
  EXPECT_THROW(ring_allreduce(net, codec, uniform_inputs(2, 10, 1)), std::invalid_argument);
  auto in = uniform_inputs(3, 10, 1);
  in[1].pop_back();
  EXPECT_THROW(ring_allreduce(net, codec, in), std::invalid_argument);
  EXPECT_THROW(rd_allreduce(net, codec, in), std::invalid_argument);
  const DataBuffer data(10, 1.0f);
  const std::vector<std::size_t> wrong_n{5, 5};
  const std::vector<std::size_t> wrong_sum{5, 5, 5};
  EXPECT_THROW(binomial_scatter(net, codec, data, wrong_n), std::invalid_argument);
  EXPECT_THROW(binomial_scatter(net, codec, data, wrong_sum), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Zero preservation and lossless exactness

TEST(Properties, ZeroInputsStayZero) {
  for (int n : {2, 3, 6, 8}) {
    const std::vector<DataBuffer> zeros(static_cast<std::size_t>(n), DataBuffer(300, 0.0f));
    for (const char* algo : {"ring-allgather", "ring-reduce-scatter", "ring-allreduce",
                             "rd-allreduce", "binomial-scatter", "cprp2p-allgather"}) {
      RunSpec spec;
      spec.algorithm = algo;
      spec.eb = 1e-3;
      const RunResult res = run_collective(spec, zeros);
      for (const auto& b : res.outputs)
        for (float v : b) ASSERT_EQ(v, 0.0f) << algo << " n=" << n;
    }
  }
}

TEST(Properties, LosslessMatchesDirectComputation) {
  const LosslessCodec raw;
  for (int n = 1; n <= 16; ++n) {
    const auto in = integer_inputs(n, 203, static_cast<std::uint64_t>(n) * 31);
    const DataBuffer sum = direct_sum(in);
    const DataBuffer cat = direct_concat(in);
    {
      Network net(CommunicatorSpec{n, 0});
      for (const auto& b : ring_allreduce(net, raw, in)) EXPECT_EQ(b, sum) << "n=" << n;
    }
    {
      Network net(CommunicatorSpec{n, 0});
      for (const auto& b : rd_allreduce(net, raw, in)) EXPECT_EQ(b, sum) << "n=" << n;
    }
    {
      Network net(CommunicatorSpec{n, 0});
      const auto out = ring_reduce_scatter(net, raw, in);
      for (int i = 0; i < n; ++i) {
        const auto [b, e] = ceil_chunk(sum.size(), n, (i + 1) % n);
        EXPECT_EQ(out[i], DataBuffer(sum.begin() + b, sum.begin() + e)) << "n=" << n;
      }
    }
    {
      Network net(CommunicatorSpec{n, 0});
      for (const auto& b : ring_allgather(net, raw, in)) EXPECT_EQ(b, cat);
    }
    {
      Network net(CommunicatorSpec{n, n / 2});
      const auto counts = even_counts(cat.size(), n);
      const auto out = binomial_scatter(net, raw, cat, counts);
      std::size_t off = 0;
      for (int i = 0; i < n; ++i) {
        EXPECT_EQ(out[i], DataBuffer(cat.begin() + off, cat.begin() + off + counts[i]));
        off += counts[i];
      }
    }
  }
}

TEST(Properties, MaxReduction) {
  const auto in = integer_inputs(6, 100, 17);
  DataBuffer expect(100, 0.0f);
  for (const auto& b : in)
    for (std::size_t j = 0; j < 100; ++j) expect[j] = std::max(expect[j], b[j]);
  Network net(CommunicatorSpec{6, 0});
  for (const auto& b : rd_allreduce(net, LosslessCodec{}, in, ReduceOp::max)) EXPECT_EQ(b, expect);
}

// ---------------------------------------------------------------------------
// Error budgets against the lossless twin

TEST(Properties, ErrorBudgetsHold) {
  const std::vector<const char*> algos{"ring-allgather", "ring-reduce-scatter", "ring-allreduce",
                                       "rd-allreduce", "binomial-scatter", "cprp2p-allgather"};
  for (double eb : {1e-3, 1e-4, 1e-5}) {
    for (int n : {2, 3, 4, 5, 7, 8}) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        std::vector<DataBuffer> in;
        for (int r = 0; r < n; ++r) in.push_back(testing::varied_buffer(257, seed * 100 + r));
        for (const char* algo : algos) {
          RunSpec spec;
          spec.algorithm = algo;
          spec.eb = eb;
          spec.root = n - 1;
          const RunResult res = run_collective(spec, in);
          double peak = 0.0;
          for (const auto& b : res.oracle)
            for (float v : b) peak = std::max(peak, std::fabs(double(v)));
          const Algorithm a = lookup_algorithm(algo).algorithm;
          const double budget = res.report.error_budget + rounding_allowance(a, n, ReduceOp::sum, peak);
          EXPECT_LE(res.report.accuracy.max_abs_err, budget)
              << algo << " n=" << n << " eb=" << eb << " seed=" << seed;
          if (a == Algorithm::binomial_scatter) {
            EXPECT_EQ(res.outputs[n - 1], res.oracle[n - 1]);
          }
        }
      }
    }
  }
}

TEST(Properties, Cprp2pWithinHopBound) {
  const auto in = uniform_inputs(4, 2000, 21);
  RunSpec spec;
  spec.algorithm = "cprp2p-allgather";
  spec.eb = 1e-4;
  const RunResult cp = run_collective(spec, in);
  EXPECT_LE(cp.report.accuracy.max_abs_err, 3e-4);
  spec.algorithm = "ring-allgather";
  const RunResult gz = run_collective(spec, in);
  EXPECT_LE(gz.report.accuracy.max_abs_err, 1e-4);
}

TEST(Properties, MeanSignedErrorNearZero) {
  const double eb = 1e-4;
  double total = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RunSpec spec;
    spec.algorithm = "ring-allreduce";
    spec.eb = eb;
    const RunResult res = run_collective(spec, uniform_inputs(4, 256, seed));
    for (int r = 0; r < 4; ++r) {
      for (std::size_t j = 0; j < 256; ++j) {
        total += double(res.outputs[r][j]) - double(res.oracle[r][j]);
        ++count;
      }
    }
  }
  EXPECT_LT(std::fabs(total / count), eb / 10);
}

// ---------------------------------------------------------------------------
// Forwarding purity: every message carrying a chunk carries the owner's bytes.

TEST(Properties, AllgatherForwardsOwnerBytes) {
  const int n = 6;
  const auto in = uniform_inputs(n, 333, 8);
  const EbzCodec codec{ErrorBound(1e-4)};
  Network net(CommunicatorSpec{n, 0}, CostModel{}, NetworkOptions{1.0, true});
  ring_allgather(net, codec, in);
  std::vector<Bytes> owner_blob;
  for (const auto& b : in) owner_blob.push_back(compress(b, ErrorBound(1e-4)));
  ASSERT_EQ(net.trace().size(), static_cast<std::size_t>(n * (n - 1)));
  for (const auto& rec : net.trace()) {
    auto body = open_envelope(rec.framed);
    const Bytes got(body.begin(), body.end());
    bool matches = false;
    for (const auto& blob : owner_blob) matches = matches || (got == blob);
    EXPECT_TRUE(matches) << rec.from << "->" << rec.to;
  }
}

TEST(Properties, ScatterForwardsRootBytes) {
  const int n = 11;
  const DataBuffer data = uniform_buffer(1100, 12);
  const auto counts = even_counts(data.size(), n);
  Network net(CommunicatorSpec{n, 3}, CostModel{}, NetworkOptions{1.0, true});
  binomial_scatter(net, EbzCodec{ErrorBound(1e-4)}, data, counts);
  // independent per-block blobs in rank order
  std::vector<Bytes> blob(static_cast<std::size_t>(n));
  std::size_t off = 0;
  for (int r = 0; r < n; ++r) {
    blob[r] = compress(std::span<const float>(data).subspan(off, counts[r]), ErrorBound(1e-4));
    off += counts[r];
  }
  for (const auto& rec : net.trace()) {
    auto body = open_envelope(rec.framed);
    // 24-byte range header plus the n-entry size table, then block bytes
    const std::uint64_t first = detail::get_u64(body.data());
    const std::uint64_t count = detail::get_u64(body.data() + 8);
    Bytes expect;
    for (std::uint64_t k = first; k < first + count; ++k) {
      const int r = static_cast<int>((3 + k) % n);
      expect.insert(expect.end(), blob[r].begin(), blob[r].end());
    }
    const auto bytes = body.subspan(24 + 8 * n);
    EXPECT_EQ(Bytes(bytes.begin(), bytes.end()), expect);
  }
  EXPECT_EQ(net.trace().size(), static_cast<std::size_t>(n - 1));
}

// ---------------------------------------------------------------------------

TEST(Properties, Deterministic) {
  const auto in = uniform_inputs(6, 1000, 5);
  for (const char* algo : {"ring-allreduce", "rd-allreduce", "binomial-scatter"}) {
    RunSpec spec;
    spec.algorithm = algo;
    const RunResult a = run_collective(spec, in);
    const RunResult b = run_collective(spec, in);
    EXPECT_EQ(a.outputs, b.outputs);
    EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());
  }
}

TEST(Properties, FixedRateCodecRuns) {
  RunSpec spec;
  spec.algorithm = "ring-allreduce";
  spec.codec = CodecKind::fixed_rate;
  spec.fixed_rate_bits = 12;
  const RunResult res = run_collective(spec, uniform_inputs(4, 512, 3));
  EXPECT_EQ(res.report.codec, "fixed-rate");
  EXPECT_TRUE(std::isinf(res.report.error_budget));
  EXPECT_LT(res.report.accuracy.max_abs_err, 0.01);
  EXPECT_GT(res.report.compression_ratio, 2.0);
}

// Timing structure: overlapping and multi-stream never lose.
TEST(Timing, OverlapNeverSlower) {
  const auto in = uniform_inputs(8, 4096, 2);
  for (const char* algo : {"ring-allreduce", "rd-allreduce", "ring-allgather"}) {
    RunSpec spec;
    spec.algorithm = algo;
    spec.network.size_scale = 1000;
    spec.cost.overlap = true;
    const double on = run_collective(spec, in).report.makespan_s;
    spec.cost.overlap = false;
    const double off = run_collective(spec, in).report.makespan_s;
    EXPECT_LT(on, off) << algo;
  }
}

TEST(Timing, MultiStreamScatterFaster) {
  const DataBuffer data = uniform_buffer(64 * 256, 1);
  RunSpec spec;
  spec.algorithm = "binomial-scatter";
  spec.network.size_scale = 1000;
  std::vector<DataBuffer> in(64);
  in[0] = data;
  spec.cost.multi_stream = true;
  const RunResult on = run_collective(spec, in);
  spec.cost.multi_stream = false;
  const RunResult off = run_collective(spec, in);
  EXPECT_LT(on.report.per_rank[0].compress_s, off.report.per_rank[0].compress_s);
  EXPECT_LE(on.report.makespan_s, off.report.makespan_s);
  EXPECT_EQ(on.outputs, off.outputs);
}

}  // namespace
}  // namespace gzccl
