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

#ifndef EPIR_BIT_VECTOR_HPP_
#define EPIR_BIT_VECTOR_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epir/error.hpp"

namespace epir {

// Fixed-length binary vector, the request vector of XOR-based schemes.
// Bits beyond size() in the last word are always zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  static BitVector Unit(std::size_t size, std::size_t position) {
    BitVector v(size);
    v.Set(position, true);
    return v;
  }

  std::size_t size() const { return size_; }

  bool Get(std::size_t i) const {
    CheckIndex(i);
    return (words_[i / 64] >> (i % 64)) & 1U;
  }

  void Set(std::size_t i, bool value) {
    CheckIndex(i);
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value) {
      words_[i / 64] |= mask;
    } else {
      words_[i / 64] &= ~mask;
    }
  }

  void Flip(std::size_t i) {
    CheckIndex(i);
    words_[i / 64] ^= std::uint64_t{1} << (i % 64);
  }

  std::size_t Popcount() const {
    std::size_t total = 0;
    for (std::uint64_t w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }

  BitVector& operator^=(const BitVector& other) {
    if (other.size_ != size_) {
      throw ContractError("BitVector XOR: length " + std::to_string(size_) +
                          " vs " + std::to_string(other.size_));
    }
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other.words_[k];
    return *this;
  }

  friend BitVector operator^(BitVector a, const BitVector& b) {
    a ^= b;
    return a;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

  // Calls fn(index) for every set bit in ascending order.
  template <typename Fn>
  void ForEachSetBit(Fn&& fn) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      std::uint64_t w = words_[k];
      while (w != 0) {
        const int bit = std::countr_zero(w);
        fn(k * 64 + static_cast<std::size_t>(bit));
        w &= w - 1;
      }
    }
  }

  // Packs bit k into bit (k mod 8) of byte floor(k/8), least-significant
  // bit first.
  std::vector<std::uint8_t> ToBytes() const {
    std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
    for (std::size_t b = 0; b < out.size(); ++b) {
      out[b] = static_cast<std::uint8_t>(words_[b / 8] >> (8 * (b % 8)));
    }
    return out;
  }

  // Inverse of ToBytes. Padding bits past `size` must be zero.
  static BitVector FromBytes(std::span<const std::uint8_t> bytes, std::size_t size) {
    if (bytes.size() != (size + 7) / 8) {
      throw ContractError("BitVector::FromBytes: expected " +
                          std::to_string((size + 7) / 8) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    BitVector v(size);
    for (std::size_t b = 0; b < bytes.size(); ++b) {
      v.words_[b / 8] |= std::uint64_t{bytes[b]} << (8 * (b % 8));
    }
    if (size % 64 != 0 && !v.words_.empty() &&
        (v.words_.back() >> (size % 64)) != 0) {
      throw ContractError("BitVector::FromBytes: nonzero padding bits");
    }
    return v;
  }

  std::span<const std::uint64_t> words() const { return words_; }

 private:
  void CheckIndex(std::size_t i) const {
    if (i >= size_) {
      throw ContractError("BitVector index " + std::to_string(i) +
                          " out of range for length " + std::to_string(size_));
    }
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace epir

#endif  // EPIR_BIT_VECTOR_HPP_
