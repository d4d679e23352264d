// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace gzccl {

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("length mismatch: " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}
}  // namespace detail

inline double max_abs_error(std::span<const float> ref, std::span<const float> test) {
  detail::require_same_length(ref.size(), test.size());
  double worst = 0.0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    worst = std::max(worst, std::fabs(static_cast<double>(test[j]) - static_cast<double>(ref[j])));
  }
  return worst;
}

inline double mean_squared_error(std::span<const float> ref, std::span<const float> test) {
  detail::require_same_length(ref.size(), test.size());
  if (ref.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    const double d = static_cast<double>(test[j]) - static_cast<double>(ref[j]);
    acc += d * d;
  }
  return acc / static_cast<double>(ref.size());
}

/// 10 log10(range^2 / mse) with range = max(ref) - min(ref). Identical
/// buffers give +infinity.
inline double psnr(std::span<const float> ref, std::span<const float> test) {
  detail::require_same_length(ref.size(), test.size());
  if (ref.empty()) throw std::invalid_argument("psnr of empty buffers");
  const double mse = mean_squared_error(ref, test);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const auto [mn, mx] = std::minmax_element(ref.begin(), ref.end());
  const double range = static_cast<double>(*mx) - static_cast<double>(*mn);
  if (range == 0.0) throw std::domain_error("psnr undefined: constant reference with non-zero error");
  return 10.0 * std::log10(range * range / mse);
}

inline double compression_ratio(double original_bytes, double compressed_bytes) {
  if (!(compressed_bytes > 0.0)) throw std::invalid_argument("compressed size must be > 0");
  return original_bytes / compressed_bytes;
}

struct AccuracyStats {
  double max_abs_err = 0.0;
  double mse = 0.0;
  double psnr = std::numeric_limits<double>::infinity();
  double mean_signed_err = 0.0;
};

inline AccuracyStats accuracy_stats(std::span<const float> ref, std::span<const float> test) {
  detail::require_same_length(ref.size(), test.size());
  AccuracyStats s;
  if (ref.empty()) return s;
  s.max_abs_err = max_abs_error(ref, test);
  s.mse = mean_squared_error(ref, test);
  try {
    s.psnr = psnr(ref, test);
  } catch (const std::domain_error&) {
    s.psnr = std::numeric_limits<double>::quiet_NaN();
  }
  double signed_sum = 0.0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    signed_sum += static_cast<double>(test[j]) - static_cast<double>(ref[j]);
  }
  s.mean_signed_err = signed_sum / static_cast<double>(ref.size());
  return s;
}

}  // namespace gzccl
