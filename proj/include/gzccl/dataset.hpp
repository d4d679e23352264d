// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeded synthetic data and raw binary32 dataset ingestion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "codec.hpp"

namespace gzccl {

/// mt19937_64 with a portable float conversion (std distributions are not
/// reproducible across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 24 random mantissa bits.
  float uniform01() { return static_cast<float>(engine_() >> 40) * 0x1.0p-24f; }
  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline DataBuffer uniform_buffer(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DataBuffer out(n);
  for (auto& v : out) v = rng.uniform01();
  return out;
}

/// x_j = (offset + j) * step
inline DataBuffer ramp_buffer(std::size_t n, std::size_t offset = 0, double step = 0.001) {
  DataBuffer out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<float>(static_cast<double>(offset + j) * step);
  return out;
}

/// Smooth bivariate sinusoid plus seeded uniform noise, normalized to [0,1].
inline DataBuffer synthetic_image(int width, int height, std::uint64_t seed, float noise = 0.05f) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  Rng rng(seed);
  const double two_pi = 2.0 * std::numbers::pi;
  const double phase_x = rng.uniform01() * two_pi;
  const double phase_y = rng.uniform01() * two_pi;
  DataBuffer img(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width;
      const double v = static_cast<double>(y) / height;
      const double base = 0.5 + 0.25 * std::sin(two_pi * 1.5 * u + phase_x) +
                          0.2 * std::cos(two_pi * 2.0 * v + phase_y) *
                              std::sin(two_pi * 0.5 * (u + v));
      img[static_cast<std::size_t>(y) * width + x] =
          static_cast<float>(base + noise * (rng.uniform01() - 0.5));
    }
  }
  float lo = img[0], hi = img[0];
  for (float p : img) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  const float span = hi - lo;
  for (auto& p : img) p = span > 0.0f ? (p - lo) / span : 0.0f;
  return img;
}

/// Reads `count` little-endian binary32 values; rejects short files and
/// non-finite values (naming the byte offset).
inline DataBuffer load_dataset(const std::string& path, std::size_t count, std::size_t first = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  in.seekg(0, std::ios::end);
  const auto file_bytes = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t need = 4ull * (first + count);
  if (file_bytes < need) {
    throw std::runtime_error("dataset " + path + " holds " + std::to_string(file_bytes / 4) +
                             " values, need " + std::to_string(first + count));
  }
  in.seekg(static_cast<std::streamoff>(4 * first));
  std::vector<std::uint8_t> raw(4 * count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw std::runtime_error("short read from " + path);
  DataBuffer out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = detail::get_f32(raw.data() + 4 * i);
    if (!std::isfinite(out[i])) {
      throw std::runtime_error("non-finite value in " + path + " at byte offset " +
                               std::to_string(4 * (first + i)));
    }
  }
  return out;
}

inline void write_raw(const std::string& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  Bytes raw;
  raw.reserve(4 * values.size());
  for (float v : values) detail::put_f32(raw, v);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace gzccl
