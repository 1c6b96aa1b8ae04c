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

#include "epir/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "epir/bit_vector.hpp"
#include "epir/error.hpp"
#include "epir/rng.hpp"

namespace epir {
namespace {

Record RandomRecord(std::size_t bytes, RngStream& rng) {
  std::vector<std::uint8_t> data(bytes);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng());
  return Record(std::move(data));
}

// Binomial(trials, theta) mass on even counts, summed term by term.
double EvenMassByEnumeration(std::size_t trials, double theta) {
  double total = 0.0;
  double choose = 1.0;  // C(trials, k)
  for (std::size_t k = 0; k <= trials; ++k) {
    if (k > 0) choose = choose * static_cast<double>(trials - k + 1) / static_cast<double>(k);
    if (k % 2 == 0) {
      total += choose * std::pow(theta, static_cast<double>(k)) *
               std::pow(1.0 - theta, static_cast<double>(trials - k));
    }
  }
  return total;
}

TEST(SystemParamsTest, ValidatesRanges) {
  SystemParams ok{.n = 10, .d = 3, .d_a = 2, .u = 1, .b = 64};
  EXPECT_NO_THROW(ok.Validate());
  EXPECT_EQ(ok.record_bytes(), 8u);
  SystemParams bad = ok;
  bad.d_a = 4;
  EXPECT_THROW(bad.Validate(), ParameterError);
  bad = ok;
  bad.n = 1;
  EXPECT_THROW(bad.Validate(), ParameterError);
  bad = ok;
  bad.b = 12;
  EXPECT_THROW(bad.Validate(), ParameterError);
  bad = ok;
  bad.u = 0;
  EXPECT_THROW(bad.Validate(), ParameterError);
}

TEST(XorRecordsTest, SelfInverseAndIdentity) {
  RngStream rng(1, 0);
  const Record x = RandomRecord(16, rng);
  EXPECT_TRUE(xor_records(x, x).IsZero());
  EXPECT_EQ(xor_records(x, Record::Zero(16)), x);
}

TEST(XorRecordsTest, ComplementaryNibbles) {
  const Record a(std::vector<std::uint8_t>(4, 0x0F));
  const Record b(std::vector<std::uint8_t>(4, 0xF0));
  EXPECT_EQ(xor_records(a, b), Record(std::vector<std::uint8_t>(4, 0xFF)));
}

TEST(XorRecordsTest, LengthMismatchIsContractViolation) {
  EXPECT_THROW(xor_records(Record::Zero(4), Record::Zero(5)), ContractError);
}

TEST(XorRecordsTest, AbelianGroupOnRandomRecords) {
  RngStream rng(2, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const Record a = RandomRecord(24, rng);
    const Record b = RandomRecord(24, rng);
    const Record c = RandomRecord(24, rng);
    EXPECT_EQ(xor_records(a, b), xor_records(b, a));
    EXPECT_EQ(xor_records(xor_records(a, b), c), xor_records(a, xor_records(b, c)));
    EXPECT_TRUE(xor_records(a, a).IsZero());
    EXPECT_EQ(xor_records(a, Record::Zero(24)), a);
  }
}

TEST(ParityProbabilityTest, HandValues) {
  EXPECT_DOUBLE_EQ(parity_probability(7, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(parity_probability(1, 0.25), 0.75);
  EXPECT_DOUBLE_EQ(parity_probability(2, 0.25), 0.5625 + 0.0625);
  EXPECT_DOUBLE_EQ(parity_probability(0, 0.3), 1.0);
}

TEST(ParityProbabilityTest, MatchesEnumeration) {
  for (double theta : {0.05, 0.1, 0.25, 0.4, 0.5}) {
    for (std::size_t d = 0; d <= 20; ++d) {
      EXPECT_NEAR(parity_probability(d, theta), EvenMassByEnumeration(d, theta), 1e-12)
          << "d=" << d << " theta=" << theta;
    }
  }
}

TEST(ParityProbabilityTest, RejectsThetaOutsideRange) {
  EXPECT_THROW(parity_probability(3, 0.0), ParameterError);
  EXPECT_THROW(parity_probability(3, 0.51), ParameterError);
  EXPECT_THROW(parity_probability(3, -0.1), ParameterError);
}

TEST(RngStreamTest, SameSeedAndStreamReplays) {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RngStreamTest, DistinctStreamsDiffer) {
  RngStream a(42, 7);
  RngStream b(42, 8);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += a() == b() ? 1 : 0;
  EXPECT_EQ(equal, 0);
}

TEST(RngStreamTest, DerivedStreamsAreReproducibleAndDistinct) {
  const RngStream root(9, 0);
  RngStream x1 = root.Derive(1);
  RngStream x2 = root.Derive(1);
  RngStream y = root.Derive(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const auto v = x1();
    EXPECT_EQ(v, x2());
    same += v == y() ? 1 : 0;
  }
  EXPECT_EQ(same, 0);
}

TEST(SampleUniformIndexTest, SingletonSupport) {
  RngStream rng(3, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_uniform_index(rng, 1), 0u);
}

TEST(SampleUniformIndexTest, ZeroIsParameterError) {
  RngStream rng(3, 0);
  EXPECT_THROW(sample_uniform_index(rng, 0), ParameterError);
}

TEST(SampleUniformIndexTest, FourValuesAreUniform) {
  RngStream rng(4, 0);
  constexpr int kDraws = 1'000'000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < kDraws; ++i) ++counts[sample_uniform_index(rng, 4)];
  const double sigma = std::sqrt(kDraws * 0.25 * 0.75);
  double chi2 = 0.0;
  for (int c : counts) {
    EXPECT_NEAR(c, kDraws * 0.25, 3.0 * sigma);
    chi2 += (c - kDraws * 0.25) * (c - kDraws * 0.25) / (kDraws * 0.25);
  }
  EXPECT_LT(chi2, 16.27);  // chi-square, 3 dof, p = 0.001
}

TEST(SampleUniformIndexTest, FixedStreamIsDeterministic) {
  RngStream a(5, 1);
  RngStream b(5, 1);
  for (int i = 0; i < 500; ++i) EXPECT_EQ(sample_uniform_index(a, 1000), sample_uniform_index(b, 1000));
}

TEST(BitVectorTest, UnitAndXor) {
  const BitVector e3 = BitVector::Unit(70, 3);
  const BitVector e65 = BitVector::Unit(70, 65);
  EXPECT_EQ(e3.Popcount(), 1u);
  const BitVector both = e3 ^ e65;
  EXPECT_EQ(both.Popcount(), 2u);
  EXPECT_TRUE(both.Get(3));
  EXPECT_TRUE(both.Get(65));
  EXPECT_EQ((both ^ e65), e3);
  EXPECT_THROW(e3 ^ BitVector(71), ContractError);
  EXPECT_THROW(e3.Get(70), ContractError);
}

TEST(BitVectorTest, BytesAreLsbFirst) {
  BitVector v(10);
  v.Set(0, true);
  v.Set(9, true);
  const auto bytes = v.ToBytes();
  ASSERT_EQ(bytes.size(), 2u);
  EXPECT_EQ(bytes[0], 0x01);
  EXPECT_EQ(bytes[1], 0x02);
  EXPECT_EQ(BitVector::FromBytes(bytes, 10), v);
  const std::vector<std::uint8_t> padded = {0x00, 0x04};  // bit 10 is padding
  EXPECT_THROW(BitVector::FromBytes(padded, 10), ContractError);
}

TEST(BitVectorTest, RandomRoundTripThroughBytes) {
  RngStream rng(6, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.UniformIndex(300);
    BitVector v(n);
    for (std::size_t i = 0; i < n; ++i) v.Set(i, rng.Bernoulli(0.3));
    std::size_t seen = 0;
    v.ForEachSetBit([&](std::size_t i) {
      EXPECT_TRUE(v.Get(i));
      ++seen;
    });
    EXPECT_EQ(seen, v.Popcount());
    EXPECT_LE(v.Popcount(), n);
    EXPECT_EQ(BitVector::FromBytes(v.ToBytes(), n), v);
  }
}

TEST(DatabaseTest, LayoutAndCounter) {
  std::vector<std::uint8_t> blob = {1, 2, 3, 4, 5, 6};
  const Database db(2, blob);
  EXPECT_EQ(db.size(), 3u);
  EXPECT_EQ(db.At(1), Record(std::vector<std::uint8_t>{3, 4}));
  EXPECT_THROW(db.At(3), RequestError);
  EXPECT_EQ(db.access_count(), 0u);
  db.AddAccesses(5);
  EXPECT_EQ(db.access_count(), 5u);
  EXPECT_THROW(Database(4, blob), ParameterError);
  EXPECT_THROW(Database(6, blob), ParameterError);  // a single record
}

TEST(DatabaseTest, ConcurrentCounterIncrementsAccumulate) {
  RngStream rng(7, 0);
  const Database db = Database::Random(8, 4, rng);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&db] {
      for (int i = 0; i < 10000; ++i) db.AddAccesses(1);
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(db.access_count(), 80000u);
}

}  // namespace
}  // namespace epir
