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

// Domain types shared by every module: system parameters, fixed-size
// records and their XOR algebra, the replicated database, and the parity
// probability of a binomial count.

#ifndef EPIR_CORE_HPP_
#define EPIR_CORE_HPP_

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epir/bit_vector.hpp"
#include "epir/error.hpp"
#include "epir/rng.hpp"

namespace epir {

// One experiment configuration: n records of b bits replicated on d
// databases, d_a of them corrupt, u concurrent users.
struct SystemParams {
  std::size_t n = 2;
  std::size_t d = 1;
  std::size_t d_a = 0;
  std::size_t u = 1;
  std::size_t b = 64;

  std::size_t record_bytes() const { return b / 8; }

  void Validate() const {
    if (n < 2) throw ParameterError("SystemParams: n must be >= 2");
    if (d < 1) throw ParameterError("SystemParams: d must be >= 1");
    if (d_a > d) throw ParameterError("SystemParams: d_a must be <= d");
    if (u < 1) throw ParameterError("SystemParams: u must be >= 1");
    if (b == 0 || b % 8 != 0) {
      throw ParameterError("SystemParams: b must be a positive multiple of 8");
    }
  }
};

// A record payload of exactly b/8 bytes.
class Record {
 public:
  Record() = default;
  explicit Record(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  static Record Zero(std::size_t size_bytes) {
    return Record(std::vector<std::uint8_t>(size_bytes, 0));
  }

  std::size_t size() const { return bytes_.size(); }
  std::span<const std::uint8_t> bytes() const { return bytes_; }

  bool IsZero() const {
    for (std::uint8_t b : bytes_) {
      if (b != 0) return false;
    }
    return true;
  }

  // this ^= other, bytewise.
  void XorWith(std::span<const std::uint8_t> other) {
    if (other.size() != bytes_.size()) {
      throw ContractError("record XOR: length " + std::to_string(bytes_.size()) +
                          " vs " + std::to_string(other.size()));
    }
    for (std::size_t i = 0; i < bytes_.size(); ++i) bytes_[i] ^= other[i];
  }

  friend bool operator==(const Record&, const Record&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
};

inline Record xor_records(const Record& a, const Record& b) {
  Record out = a;
  out.XorWith(b.bytes());
  return out;
}

// Probability that a Binomial(trials, theta) count is even:
// 1/2 + 1/2 (1 - 2 theta)^trials.
inline double parity_probability(std::size_t trials, double theta) {
  if (!(theta > 0.0 && theta <= 0.5)) {
    throw ParameterError("parity_probability: theta must lie in (0, 1/2]");
  }
  return 0.5 + 0.5 * std::pow(1.0 - 2.0 * theta, static_cast<double>(trials));
}

// n replicated records stored contiguously, plus a cumulative count of record
// accesses. Contents are immutable after construction; the counter is the
// only mutable state and is safe to bump from concurrent readers.
class Database {
 public:
  Database(std::size_t record_bytes, std::vector<std::uint8_t> blob)
      : record_bytes_(record_bytes), blob_(std::move(blob)) {
    if (record_bytes_ == 0) throw ParameterError("Database: record size must be > 0");
    if (blob_.size() % record_bytes_ != 0) {
      throw ParameterError("Database: blob size " + std::to_string(blob_.size()) +
                           " is not a multiple of record size " +
                           std::to_string(record_bytes_));
    }
    if (blob_.size() / record_bytes_ < 2) {
      throw ParameterError("Database: need at least 2 records");
    }
  }

  Database(const Database& other)
      : record_bytes_(other.record_bytes_),
        blob_(other.blob_),
        access_counter_(other.access_count()) {}
  Database& operator=(const Database&) = delete;

  static Database Random(std::size_t n, std::size_t record_bytes, RngStream& rng) {
    std::vector<std::uint8_t> blob(n * record_bytes);
    for (auto& byte : blob) byte = static_cast<std::uint8_t>(rng());
    return Database(record_bytes, std::move(blob));
  }

  std::size_t size() const { return blob_.size() / record_bytes_; }
  std::size_t record_bytes() const { return record_bytes_; }

  std::span<const std::uint8_t> RecordBytes(std::size_t index) const {
    if (index >= size()) {
      throw RequestError("record index " + std::to_string(index) +
                         " out of range [0, " + std::to_string(size()) + ")");
    }
    return std::span<const std::uint8_t>(blob_).subspan(index * record_bytes_,
                                                        record_bytes_);
  }

  Record At(std::size_t index) const {
    auto bytes = RecordBytes(index);
    return Record(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  }

  std::uint64_t access_count() const {
    return access_counter_.load(std::memory_order_relaxed);
  }
  void AddAccesses(std::uint64_t k) const {
    access_counter_.fetch_add(k, std::memory_order_relaxed);
  }

 private:
  std::size_t record_bytes_;
  std::vector<std::uint8_t> blob_;
  mutable std::atomic<std::uint64_t> access_counter_{0};
};

}  // namespace epir

#endif  // EPIR_CORE_HPP_
