// SPDX-License-Identifier: Apache-2.0

#pragma once

// Front-end commands shared by the gzccl tool and the tests.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "codec.hpp"
#include "cost_model.hpp"
#include "dataset.hpp"
#include "runner.hpp"

namespace gzccl {

inline constexpr const char* kCostConfigEnv = "GZCCL_COST_CONFIG";

/// Cost parameters from an explicit path, else $GZCCL_COST_CONFIG, else
/// defaults.
inline CostParams resolve_cost_params(const std::string& path) {
  if (!path.empty()) return load_cost_params(path);
  if (const char* env = std::getenv(kCostConfigEnv); env != nullptr && *env != '\0') {
    return load_cost_params(env);
  }
  return CostParams{};
}

struct BenchConfig {
  std::string algorithm = "ring-allreduce";
  int ranks = 4;
  std::size_t elements = 1024;  // per rank
  double eb = 1e-4;
  std::string codec = "ebz";
  unsigned bits = 16;
  std::uint64_t seed = 1;
  std::string data = "uniform";  // uniform | ramp | file:PATH
  std::string cost_config;
  std::optional<bool> overlap;
  std::optional<bool> staging;
  std::optional<bool> multi_stream;
  double size_scale = 1.0;
  int root = 0;
  std::string out;
  std::string format = "json";
};

/// One buffer per rank of `elements` values from the configured source.
inline std::vector<DataBuffer> bench_inputs(const BenchConfig& cfg) {
  if (cfg.ranks < 1) throw std::invalid_argument("--ranks must be >= 1");
  std::vector<DataBuffer> per_rank(static_cast<std::size_t>(cfg.ranks));
  if (cfg.data == "uniform") {
    for (int r = 0; r < cfg.ranks; ++r) {
      per_rank[r] = uniform_buffer(cfg.elements, derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    }
  } else if (cfg.data == "ramp") {
    for (int r = 0; r < cfg.ranks; ++r) per_rank[r] = ramp_buffer(cfg.elements, r * cfg.elements);
  } else if (cfg.data.rfind("file:", 0) == 0) {
    const std::string path = cfg.data.substr(5);
    for (int r = 0; r < cfg.ranks; ++r) {
      per_rank[r] = load_dataset(path, cfg.elements, static_cast<std::size_t>(r) * cfg.elements);
    }
  } else {
    throw std::invalid_argument("unknown data source '" + cfg.data + "'");
  }
  return per_rank;
}

inline RunSpec bench_spec(const BenchConfig& cfg) {
  RunSpec spec;
  spec.algorithm = cfg.algorithm;
  lookup_algorithm(spec.algorithm);
  spec.codec = parse_codec(cfg.codec);
  spec.eb = cfg.eb;
  spec.fixed_rate_bits = cfg.bits;
  spec.root = cfg.root;
  spec.cost = resolve_cost_params(cfg.cost_config);
  if (cfg.overlap) spec.cost.overlap = *cfg.overlap;
  if (cfg.staging) spec.cost.staging = *cfg.staging;
  if (cfg.multi_stream) spec.cost.multi_stream = *cfg.multi_stream;
  spec.network.size_scale = cfg.size_scale;
  return spec;
}

inline void write_report(const CollectiveReport& report, const std::string& path,
                         const std::string& format) {
  std::ostringstream body;
  if (format == "json") {
    body << to_json(report).dump(2) << '\n';
  } else if (format == "csv") {
    body << kReportCsvHeader << '\n' << to_csv_row(report) << '\n';
  } else {
    throw std::invalid_argument("unknown output format '" + format + "'");
  }
  if (path.empty() || path == "-") {
    std::cout << body.str();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body.str();
}

inline CollectiveReport cmd_bench(const BenchConfig& cfg) {
  const RunSpec spec = bench_spec(cfg);
  std::vector<DataBuffer> inputs = bench_inputs(cfg);
  if (lookup_algorithm(spec.algorithm).algorithm == Algorithm::binomial_scatter) {
    // root holds every rank's block back to back
    if (cfg.root < 0 || cfg.root >= cfg.ranks) throw std::invalid_argument("--root out of range");
    DataBuffer all;
    for (const auto& b : inputs) all.insert(all.end(), b.begin(), b.end());
    for (auto& b : inputs) b.clear();
    inputs[static_cast<std::size_t>(cfg.root)] = std::move(all);
  }
  RunResult result = run_collective(spec, inputs);
  write_report(result.report, cfg.out, cfg.format);
  return result.report;
}

// ---------------------------------------------------------------------------

struct CharacterizeRow {
  double bytes = 0;
  double model_compress_s = 0;
  double model_decompress_s = 0;
  double measured_compress_s = 0;
  double measured_decompress_s = 0;
};

inline constexpr std::string_view kCharacterizeCsvHeader =
    "bytes,model_compress_s,model_decompress_s,measured_compress_s,measured_decompress_s";

/// Model and measured codec time at `points` log-spaced sizes (multiples of
/// 4 bytes). Measurement runs on seeded uniform data, best of `repeats`.
inline std::vector<CharacterizeRow> characterize(double min_bytes, double max_bytes, int points,
                                                 const CostParams& params, bool measure = true,
                                                 double eb = 1e-4, int repeats = 3) {
  if (!(min_bytes > 0.0) || !(max_bytes > min_bytes)) {
    throw std::invalid_argument("characterize needs 0 < min_bytes < max_bytes");
  }
  if (points < 2) throw std::invalid_argument("characterize needs at least 2 points");
  const CostModel model(params);
  std::vector<CharacterizeRow> rows;
  for (int k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) / (points - 1);
    const double raw = min_bytes * std::pow(max_bytes / min_bytes, t);
    const auto elems = static_cast<std::size_t>(std::llround(raw / 4.0));
    CharacterizeRow row;
    row.bytes = 4.0 * static_cast<double>(elems);
    row.model_compress_s = model.kernel_time(row.bytes, KernelKind::compress);
    row.model_decompress_s = model.kernel_time(row.bytes, KernelKind::decompress);
    if (measure) {
      const DataBuffer data = uniform_buffer(elems, 0xC0FFEEull + static_cast<std::uint64_t>(k));
      CodecWorkspace ws;
      double best_c = INFINITY, best_d = INFINITY;
      for (int rep = 0; rep < repeats; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        auto blob = ws.compress(data, ErrorBound(eb));
        const auto t1 = std::chrono::steady_clock::now();
        Bytes copy(blob.begin(), blob.end());
        const auto t2 = std::chrono::steady_clock::now();
        ws.decompress(copy);
        const auto t3 = std::chrono::steady_clock::now();
        best_c = std::min(best_c, std::chrono::duration<double>(t1 - t0).count());
        best_d = std::min(best_d, std::chrono::duration<double>(t3 - t2).count());
      }
      row.measured_compress_s = best_c;
      row.measured_decompress_s = best_d;
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_characterize_csv(const std::vector<CharacterizeRow>& rows, std::ostream& os) {
  os << kCharacterizeCsvHeader << '\n';
  for (const auto& r : rows) {
    os << nlohmann::json(r.bytes).dump() << ',' << nlohmann::json(r.model_compress_s).dump()
       << ',' << nlohmann::json(r.model_decompress_s).dump() << ','
       << nlohmann::json(r.measured_compress_s).dump() << ','
       << nlohmann::json(r.measured_decompress_s).dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

struct StackConfig {
  int images = 64;
  int width = 128;
  int height = 128;
  double eb = 2e-4;
  std::string algorithm = "rd-allreduce";
  std::uint64_t seed = 1;
  std::string cost_config;
  std::string out;     // stacked image, raw binary32
  std::string report;  // JSON report
};

struct StackResult {
  DataBuffer stacked;  // rank 0's result
  DataBuffer lossless;
  CollectiveReport report;
};

/// Sums N seeded synthetic images with an Allreduce across N ranks.
inline StackResult cmd_stack(const StackConfig& cfg) {
  if (cfg.images < 2) throw std::invalid_argument("stacking needs at least 2 images");
  if (cfg.width <= 0 || cfg.height <= 0) throw std::invalid_argument("image dimensions must be positive");
  const Algorithm algo = lookup_algorithm(cfg.algorithm).algorithm;
  if (algo != Algorithm::ring_allreduce && algo != Algorithm::rd_allreduce) {
    throw std::invalid_argument("stacking needs an allreduce algorithm, got " + cfg.algorithm);
  }
  std::vector<DataBuffer> imgs(static_cast<std::size_t>(cfg.images));
  for (int i = 0; i < cfg.images; ++i) {
    imgs[i] = synthetic_image(cfg.width, cfg.height, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
  }
  RunSpec spec;
  spec.algorithm = cfg.algorithm;
  spec.eb = cfg.eb;
  spec.cost = resolve_cost_params(cfg.cost_config);
  RunResult run = run_collective(spec, imgs);
  StackResult res{run.outputs.front(), run.oracle.front(), run.report};
  if (!cfg.out.empty()) write_raw(cfg.out, res.stacked);
  if (!cfg.report.empty()) write_report(res.report, cfg.report, "json");
  return res;
}

}  // namespace gzccl
