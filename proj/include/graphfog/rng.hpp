// Copyright 2026 The graphfog Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace graphfog {

namespace detail {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Named random stream derived from a master seed.
///
/// The generator seed is splitmix64(masterSeed ^ splitmix64(fnv1a64(streamId))),
/// so each stream depends only on its own (seed, label) pair. Uniform and
/// Gaussian variates are derived by hand from the raw 64-bit output because
/// std:: distributions are not bit-identical across standard libraries.
class RngStream {
 public:
  static constexpr const char* kGeneratorIdentity =
      "mt19937_64; seed=splitmix64(master^splitmix64(fnv1a64(stream))); "
      "uniform=53-bit; normal=marsaglia-polar";

  RngStream(std::uint64_t master_seed, std::string stream_id)
      : master_seed_(master_seed),
        stream_id_(std::move(stream_id)),
        engine_(derive_seed(master_seed_, stream_id_)) {}

  static std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stream_id) {
    return detail::splitmix64(master_seed ^ detail::splitmix64(detail::fnv1a64(stream_id)));
  }

  std::uint64_t master_seed() const { return master_seed_; }
  const std::string& stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  double standard_normal() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    return u * m;
  }

  double normal(double mean, double sigma) {
    if (sigma == 0.0) return mean;
    return mean + sigma * standard_normal();
  }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.master_seed_ == b.master_seed_ && a.stream_id_ == b.stream_id_ && a.engine_ == b.engine_ &&
           a.spare_ == b.spare_;
  }

 private:
  std::uint64_t master_seed_;
  std::string stream_id_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

inline RngStream rng_stream(std::uint64_t master_seed, std::string stream_id) {
  return RngStream(master_seed, std::move(stream_id));
}

}  // namespace graphfog
