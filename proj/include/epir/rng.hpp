// Copyright 2026 The epir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EPIR_RNG_HPP_
#define EPIR_RNG_HPP_

#include <cstdint>
#include <limits>

#include "epir/error.hpp"

namespace epir {

namespace internal {

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace internal

// Counter-based deterministic generator. The i-th output of a stream is a
// pure function of (seed, stream_id, i), so two streams built from the same
// pair replay identically and streams with different ids are independent for
// simulation purposes. Not cryptographic.
//
// Satisfies UniformRandomBitGenerator, but the helpers below are preferred:
// std distributions are not portable across standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_id_(stream_id),
        key_(internal::Mix64(seed ^ internal::Mix64(stream_id + internal::kGolden))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    ++counter_;
    return internal::Mix64(key_ + counter_ * internal::kGolden);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool Bernoulli(double p) { return Uniform01() < p; }

  // Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t UniformIndex(std::uint64_t n) {
    if (n == 0) throw ParameterError("UniformIndex: n must be >= 1");
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Independent child stream; children with distinct labels do not overlap.
  RngStream Derive(std::uint64_t label) const {
    return RngStream(seed_, internal::Mix64(stream_id_ ^ internal::Mix64(label + 1)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline std::uint64_t sample_uniform_index(RngStream& rng, std::uint64_t n) {
  return rng.UniformIndex(n);
}

}  // namespace epir

#endif  // EPIR_RNG_HPP_
