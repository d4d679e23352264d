// SPDX-License-Identifier: Apache-2.0

#pragma once

// Analytical timing model: alpha-beta links, device kernels with a
// utilization floor below the saturation size, host staging, and
// compute/communication overlap.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace gzccl {

enum class KernelKind { compress, decompress, reduce };

/// Link and device parameters. Throughput defaults are placeholders, not
/// measurements; override them from a JSON file for a particular machine.
struct CostParams {
  double alpha = 10e-6;                  // s per message
  double beta = 8e-11;                   // s per byte (100 Gb/s)
  double launch = 200e-6;                // s per kernel invocation, incl. host sync
  double saturation = 5.05e6;            // bytes; kernel time is flat below this
  double compress_throughput = 1.28e11;  // B/s
  double decompress_throughput = 1.28e11;
  double reduce_throughput = 4e11;
  double host_device_bandwidth = 2.4e10;  // B/s
  bool staging = false;
  bool overlap = true;
  bool multi_stream = true;

  void validate() const {
    const double positive[] = {alpha, beta, launch, saturation, compress_throughput,
                               decompress_throughput, reduce_throughput,
                               host_device_bandwidth};
    for (double v : positive) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("cost parameters must be finite and > 0");
      }
    }
  }

  double throughput(KernelKind kind) const {
    switch (kind) {
      case KernelKind::compress: return compress_throughput;
      case KernelKind::decompress: return decompress_throughput;
      case KernelKind::reduce: return reduce_throughput;
    }
    return compress_throughput;
  }
};

inline void to_json(nlohmann::json& j, const CostParams& p) {
  j = nlohmann::json{{"alpha", p.alpha},
                     {"beta", p.beta},
                     {"launch", p.launch},
                     {"saturation", p.saturation},
                     {"compress_throughput", p.compress_throughput},
                     {"decompress_throughput", p.decompress_throughput},
                     {"reduce_throughput", p.reduce_throughput},
                     {"host_device_bandwidth", p.host_device_bandwidth},
                     {"staging", p.staging},
                     {"overlap", p.overlap},
                     {"multi_stream", p.multi_stream}};
}

// Missing fields keep their defaults; unknown fields are rejected so typos
// do not silently fall back.
inline void from_json(const nlohmann::json& j, CostParams& p) {
  if (!j.is_object()) throw std::invalid_argument("cost config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha") value.get_to(p.alpha);
    else if (key == "beta") value.get_to(p.beta);
    else if (key == "launch") value.get_to(p.launch);
    else if (key == "saturation") value.get_to(p.saturation);
    else if (key == "compress_throughput") value.get_to(p.compress_throughput);
    else if (key == "decompress_throughput") value.get_to(p.decompress_throughput);
    else if (key == "reduce_throughput") value.get_to(p.reduce_throughput);
    else if (key == "host_device_bandwidth") value.get_to(p.host_device_bandwidth);
    else if (key == "staging") value.get_to(p.staging);
    else if (key == "overlap") value.get_to(p.overlap);
    else if (key == "multi_stream") value.get_to(p.multi_stream);
    else throw std::invalid_argument("unknown cost parameter '" + key + "'");
  }
  p.validate();
}

inline CostParams load_cost_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cost config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cost config " + path + ": " + e.what());
  }
  CostParams p;
  from_json(j, p);
  return p;
}

class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(CostParams params) : p_(params) { p_.validate(); }

  const CostParams& params() const noexcept { return p_; }

  double msg_time(double bytes) const { return p_.alpha + bytes * p_.beta; }

  double kernel_time(double bytes, KernelKind kind) const {
    return p_.launch + std::max(bytes, p_.saturation) / p_.throughput(kind);
  }

  /// Several independent kernels of one kind. Multi-stream pays one launch
  /// and runs them at aggregate throughput; otherwise they run back to back.
  double multi_launch_time(std::span<const double> sizes, KernelKind kind) const {
    if (sizes.empty()) throw std::invalid_argument("multi_launch_time needs at least one size");
    if (p_.multi_stream) {
      return kernel_time(std::accumulate(sizes.begin(), sizes.end(), 0.0), kind);
    }
    double t = 0.0;
    for (double s : sizes) t += kernel_time(s, kind);
    return t;
  }

  /// Device->host before the send plus host->device after the receive.
  double staging_time(double bytes) const {
    return p_.staging ? 2.0 * bytes / p_.host_device_bandwidth : 0.0;
  }

  double step_time(double comm_seconds, double compute_seconds) const {
    return p_.overlap ? std::max(comm_seconds, compute_seconds)
                      : comm_seconds + compute_seconds;
  }

 private:
  CostParams p_{};
};

}  // namespace gzccl
