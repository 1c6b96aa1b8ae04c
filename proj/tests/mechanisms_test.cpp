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

#include "epir/mechanisms.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/execute.hpp"
#include "epir/rng.hpp"

namespace epir {
namespace {

std::vector<std::uint32_t> Indices(const Dispatch& dispatch) {
  return std::get<FetchIndices>(dispatch.request).indices;
}

const BitVector& Selector(const Dispatch& dispatch) {
  return std::get<XorSelect>(dispatch.request).selector;
}

std::vector<std::uint32_t> AllIndices(const QueryPlan& plan) {
  std::vector<std::uint32_t> all;
  for (const auto& dispatch : plan.dispatches) {
    const auto part = Indices(dispatch);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

BitVector XorOfRows(const QueryPlan& plan, std::size_t n) {
  BitVector acc(n);
  for (const auto& dispatch : plan.dispatches) acc ^= Selector(dispatch);
  return acc;
}

// Probability of each d-bit column pattern under d Bernoulli(theta) trials
// conditioned on the given parity, by enumeration of all 2^d patterns.
std::map<unsigned, double> ConditionedColumnLaw(std::size_t d, double theta, bool odd) {
  std::map<unsigned, double> law;
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    const int w = __builtin_popcount(mask);
    if ((w % 2 == 1) != odd) continue;
    const double pr = std::pow(theta, w) * std::pow(1.0 - theta, static_cast<int>(d) - w);
    law[mask] = pr;
    total += pr;
  }
  for (auto& [mask, pr] : law) pr /= total;
  return law;
}

TEST(GenNaiveDummyTest, FullDownloadAtPEqualsN) {
  RngStream rng(1, 0);
  const QueryPlan plan = gen_naive_dummy(5, 10, 10, rng);
  ASSERT_EQ(plan.dispatches.size(), 1u);
  EXPECT_EQ(Indices(plan.dispatches[0]), (std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST(GenNaiveDummyTest, DistinctSetContainingTarget) {
  RngStream rng(2, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const QueryPlan plan = gen_naive_dummy(5, 3, 10, rng);
    const auto idx = Indices(plan.dispatches[0]);
    EXPECT_EQ(idx.size(), 3u);
    EXPECT_EQ(std::set<std::uint32_t>(idx.begin(), idx.end()).size(), 3u);
    EXPECT_NE(std::find(idx.begin(), idx.end(), 5u), idx.end());
    EXPECT_EQ(plan.reconstruction, Reconstruction::kPickIndex);
  }
}

TEST(GenNaiveDummyTest, DummyUniformOverOtherIndices) {
  RngStream rng(3, 0);
  constexpr int kTrials = 100000;
  int ones = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto idx = Indices(gen_naive_dummy(0, 2, 3, rng).dispatches[0]);
    ones += std::find(idx.begin(), idx.end(), 1u) != idx.end() ? 1 : 0;
  }
  EXPECT_NEAR(ones, kTrials / 2.0, 4.0 * std::sqrt(kTrials * 0.25));
}

TEST(GenNaiveDummyTest, RejectsPAboveN) {
  RngStream rng(4, 0);
  EXPECT_THROW(gen_naive_dummy(0, 11, 10, rng), ParameterError);
  EXPECT_THROW(gen_naive_dummy(0, 1, 10, rng), ParameterError);
}

TEST(GenDirectTest, OneIndexPerServerWhenPEqualsD) {
  RngStream rng(5, 0);
  const SystemParams sp{.n = 20, .d = 4};
  const QueryPlan plan = gen_direct(7, 4, sp, rng);
  ASSERT_EQ(plan.dispatches.size(), 4u);
  for (std::size_t s = 0; s < 4; ++s) {
    EXPECT_EQ(plan.dispatches[s].server, s);
    EXPECT_EQ(Indices(plan.dispatches[s]).size(), 1u);
  }
}

TEST(GenDirectTest, PartitionLaw) {
  RngStream rng(6, 0);
  for (PopOrder order : {PopOrder::kShuffled, PopOrder::kAscending}) {
    for (int trial = 0; trial < 300; ++trial) {
      const SystemParams sp{.n = 64, .d = 4};
      const std::size_t q = rng.UniformIndex(64);
      const QueryPlan plan = gen_direct(q, 12, sp, rng, order);
      const auto all = AllIndices(plan);
      for (const auto& dispatch : plan.dispatches) EXPECT_EQ(Indices(dispatch).size(), 3u);
      EXPECT_EQ(std::set<std::uint32_t>(all.begin(), all.end()).size(), 12u);
      EXPECT_NE(std::find(all.begin(), all.end(), q), all.end());
    }
  }
}

TEST(GenDirectTest, AscendingPopMatchesHandSimulation) {
  // The set {0, 2, 3, 5} split smallest-first over two servers.
  const std::vector<std::uint32_t> set = {3, 0, 5, 2};
  RngStream rng(7, 0);
  const auto dispatches = internal::PartitionRequests(set, 2, PopOrder::kAscending, rng);
  EXPECT_EQ(Indices(dispatches[0]), (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(Indices(dispatches[1]), (std::vector<std::uint32_t>{3, 5}));
}

TEST(GenDirectTest, ShuffledPopPlacesTargetUniformly) {
  // With ascending pops the smallest index always lands on server 0; with
  // shuffled pops every server is equally likely.
  RngStream rng(8, 0);
  const SystemParams sp{.n = 32, .d = 4};
  constexpr int kTrials = 40000;
  std::vector<int> where(4, 0);
  for (int trial = 0; trial < kTrials; ++trial) {
    const QueryPlan plan = gen_direct(0, 8, sp, rng, PopOrder::kShuffled);
    for (const auto& dispatch : plan.dispatches) {
      const auto idx = Indices(dispatch);
      if (std::find(idx.begin(), idx.end(), 0u) != idx.end()) ++where[dispatch.server];
    }
  }
  for (int c : where) EXPECT_NEAR(c, kTrials / 4.0, 4.0 * std::sqrt(kTrials * 0.1875));
  const QueryPlan ascending = gen_direct(0, 8, sp, rng, PopOrder::kAscending);
  EXPECT_EQ(Indices(ascending.dispatches[0]).front(), 0u);
}

TEST(GenDirectTest, RejectsBadP) {
  RngStream rng(9, 0);
  const SystemParams sp{.n = 10, .d = 4};
  EXPECT_THROW(gen_direct(0, 6, sp, rng), ParameterError);   // not a multiple of d
  EXPECT_THROW(gen_direct(0, 12, sp, rng), ParameterError);  // above n
  const SystemParams single{.n = 10, .d = 1};
  EXPECT_THROW(gen_direct(0, 1, single, rng), ParameterError);
  EXPECT_THROW(gen_bundled_anon(0, 1, single, rng), ParameterError);
}

TEST(GenBundledAnonTest, SamePayloadAsDirectForSameStream) {
  const SystemParams sp{.n = 50, .d = 5};
  RngStream a(10, 3);
  RngStream b(10, 3);
  const QueryPlan direct = gen_direct(17, 10, sp, a);
  const QueryPlan bundled = gen_bundled_anon(17, 10, sp, b);
  ASSERT_EQ(bundled.dispatches.size(), 5u);
  for (std::size_t s = 0; s < 5; ++s) {
    EXPECT_EQ(bundled.dispatches[s].server, direct.dispatches[s].server);
    EXPECT_EQ(Indices(bundled.dispatches[s]), Indices(direct.dispatches[s]));
  }
  EXPECT_EQ(bundled.transport, Transport::kAnonBundle);
}

TEST(GenSeparatedAnonTest, OneIndexPerMessage) {
  RngStream rng(11, 0);
  const SystemParams sp{.n = 40, .d = 4};
  const QueryPlan plan = gen_separated_anon(3, 8, sp, rng);
  ASSERT_EQ(plan.dispatches.size(), 8u);
  for (const auto& dispatch : plan.dispatches) EXPECT_EQ(Indices(dispatch).size(), 1u);
  const auto all = AllIndices(plan);
  EXPECT_EQ(std::set<std::uint32_t>(all.begin(), all.end()).size(), 8u);
  EXPECT_NE(std::find(all.begin(), all.end(), 3u), all.end());
  EXPECT_EQ(plan.transport, Transport::kAnonSeparated);
}

TEST(GenSeparatedAnonTest, ServerLoadMeanIsPOverD) {
  RngStream rng(12, 0);
  const SystemParams sp{.n = 40, .d = 4};
  constexpr int kTrials = 20000;
  std::vector<double> load(4, 0.0);
  for (int trial = 0; trial < kTrials; ++trial) {
    for (const auto& dispatch : gen_separated_anon(3, 8, sp, rng).dispatches) load[dispatch.server] += 1.0;
  }
  // Each server's count per plan is Binomial(8, 1/4): mean 2, variance 1.5.
  for (double total : load) EXPECT_NEAR(total / kTrials, 2.0, 4.0 * std::sqrt(1.5 / kTrials));
}

TEST(GenSparseTest, RowsXorToUnitVector) {
  RngStream rng(13, 0);
  for (double theta : {0.05, 0.25, 0.5}) {
    for (int trial = 0; trial < 100; ++trial) {
      const SystemParams sp{.n = 77, .d = 5};
      const std::size_t q = rng.UniformIndex(77);
      const QueryPlan plan = gen_sparse(q, theta, sp, rng);
      ASSERT_EQ(plan.dispatches.size(), 5u);
      EXPECT_EQ(XorOfRows(plan, 77), BitVector::Unit(77, q));
    }
  }
}

TEST(GenSparseTest, HalfThetaGivesHalfDenseRows) {
  RngStream rng(14, 0);
  const SystemParams sp{.n = 2000, .d = 4};
  double total = 0.0;
  constexpr int kPlans = 200;
  for (int trial = 0; trial < kPlans; ++trial) {
    for (const auto& dispatch : gen_sparse(0, 0.5, sp, rng).dispatches) total += Selector(dispatch).Popcount();
  }
  EXPECT_NEAR(total / (kPlans * 4.0), 1000.0, 5.0);
}

TEST(GenSparseTest, EvenColumnWeightZeroFrequency) {
  // P(weight 0 | even) at theta = 1/4, d = 4: 0.75^4 over the even mass.
  const auto law = ConditionedColumnLaw(4, 0.25, false);
  const double expected = law.at(0);
  EXPECT_NEAR(expected, 0.31640625 / 0.53125, 1e-12);
  RngStream rng(15, 0);
  const SystemParams sp{.n = 1000, .d = 4};
  std::size_t zero = 0;
  std::size_t even_columns = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const QueryPlan plan = gen_sparse(0, 0.25, sp, rng);
    for (std::size_t col = 1; col < sp.n; ++col) {
      int w = 0;
      for (const auto& dispatch : plan.dispatches) w += Selector(dispatch).Get(col) ? 1 : 0;
      zero += w == 0 ? 1 : 0;
      ++even_columns;
    }
  }
  const double freq = static_cast<double>(zero) / static_cast<double>(even_columns);
  EXPECT_NEAR(freq, expected, 4.0 * std::sqrt(expected * (1 - expected) / even_columns));
}

TEST(GenSparseTest, ColumnLawMatchesEnumerationForBothSamplers) {
  // Total-variation distance between empirical and exact conditioned column
  // laws, 10^6 columns per (sampler, parity).
  for (ColumnSampler sampler : {ColumnSampler::kRejection, ColumnSampler::kWeightFirst}) {
    for (std::size_t d : {2u, 3u, 4u}) {
      const double theta = 0.2;
      const SystemParams sp{.n = 1000, .d = d};
      RngStream rng(16 + d, static_cast<std::uint64_t>(sampler));
      std::map<unsigned, double> odd_counts;
      std::map<unsigned, double> even_counts;
      double odd_total = 0.0;
      double even_total = 0.0;
      for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t q = trial % sp.n;
        const QueryPlan plan = gen_sparse(q, theta, sp, rng, sampler);
        for (std::size_t col = 0; col < sp.n; ++col) {
          unsigned mask = 0;
          for (std::size_t r = 0; r < d; ++r) mask |= (Selector(plan.dispatches[r]).Get(col) ? 1u : 0u) << r;
          if (col == q) {
            odd_counts[mask] += 1.0;
            odd_total += 1.0;
          } else {
            even_counts[mask] += 1.0;
            even_total += 1.0;
          }
        }
      }
      for (bool odd : {false, true}) {
        const auto law = ConditionedColumnLaw(d, theta, odd);
        const auto& counts = odd ? odd_counts : even_counts;
        const double total = odd ? odd_total : even_total;
        double tv = 0.0;
        for (const auto& [mask, pr] : law) {
          const auto it = counts.find(mask);
          tv += std::fabs((it == counts.end() ? 0.0 : it->second / total) - pr);
        }
        for (const auto& [mask, c] : counts) EXPECT_TRUE(law.count(mask)) << "wrong parity column";
        // The odd column is drawn once per plan: only 10^3 samples.
        EXPECT_LT(tv / 2.0, odd ? 0.06 : 0.01) << "d=" << d << " odd=" << odd;
      }
    }
  }
}

TEST(GenSparseTest, RejectsBadThetaAndSingleServer) {
  RngStream rng(20, 0);
  const SystemParams sp{.n = 10, .d = 3};
  EXPECT_THROW(gen_sparse(0, 0.0, sp, rng), ParameterError);
  EXPECT_THROW(gen_sparse(0, 0.6, sp, rng), ParameterError);
  const SystemParams single{.n = 10, .d = 1};
  EXPECT_THROW(gen_sparse(0, 0.25, single, rng), ParameterError);
}

TEST(GenSubsetTest, VectorsXorToUnitVector) {
  RngStream rng(21, 0);
  const SystemParams sp{.n = 100, .d = 5};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t q = rng.UniformIndex(100);
    const QueryPlan plan = gen_subset(q, 2 + trial % 4, sp, rng);
    EXPECT_EQ(XorOfRows(plan, 100), BitVector::Unit(100, q));
    std::set<std::size_t> servers;
    for (const auto& dispatch : plan.dispatches) servers.insert(dispatch.server);
    EXPECT_EQ(servers.size(), plan.dispatches.size());
  }
}

TEST(GenSubsetTest, FullSetContactsEveryServer) {
  RngStream rng(22, 0);
  const SystemParams sp{.n = 30, .d = 6};
  const QueryPlan plan = gen_subset(4, 6, sp, rng);
  std::set<std::size_t> servers;
  for (const auto& dispatch : plan.dispatches) servers.insert(dispatch.server);
  EXPECT_EQ(servers.size(), 6u);
}

TEST(GenSubsetTest, ServerSubsetsAreUniform) {
  RngStream rng(23, 0);
  const SystemParams sp{.n = 8, .d = 5};
  constexpr int kTrials = 100000;
  std::map<std::set<std::size_t>, int> counts;
  for (int trial = 0; trial < kTrials; ++trial) {
    const QueryPlan plan = gen_subset(0, 2, sp, rng);
    ++counts[{plan.dispatches[0].server, plan.dispatches[1].server}];
  }
  ASSERT_EQ(counts.size(), 10u);  // C(5, 2)
  double chi2 = 0.0;
  for (const auto& [subset, c] : counts) chi2 += (c - kTrials / 10.0) * (c - kTrials / 10.0) / (kTrials / 10.0);
  EXPECT_LT(chi2, 27.88);  // chi-square, 9 dof, p = 0.001
}

TEST(GenSubsetTest, RejectsTOutOfRange) {
  RngStream rng(24, 0);
  const SystemParams sp{.n = 10, .d = 4};
  EXPECT_THROW(gen_subset(0, 1, sp, rng), ParameterError);
  EXPECT_THROW(gen_subset(0, 5, sp, rng), ParameterError);
  const SystemParams single{.n = 10, .d = 1};
  EXPECT_THROW(gen_chor(0, single, rng), ParameterError);
}

TEST(GenChorTest, DelegatesToFullSubset) {
  RngStream rng(25, 0);
  const SystemParams sp{.n = 64, .d = 3};
  const QueryPlan plan = gen_chor(9, sp, rng);
  EXPECT_EQ(plan.dispatches.size(), 3u);
  EXPECT_EQ(XorOfRows(plan, 64), BitVector::Unit(64, 9));
}

MechanismParams ParamsFor(Mechanism m, std::size_t d) {
  switch (m) {
    case Mechanism::kNaiveDummy: return NaiveDummy{4};
    case Mechanism::kNaiveAnon: return NaiveAnon{};
    case Mechanism::kDirect: return Direct{2 * d};
    case Mechanism::kBundledAnon: return BundledAnon{2 * d};
    case Mechanism::kSeparatedAnon: return SeparatedAnon{2 * d};
    case Mechanism::kSparse: return Sparse{0.1};
    case Mechanism::kAnonSparse: return AnonSparse{0.3};
    case Mechanism::kSubset: return Subset{2};
    case Mechanism::kChor: return Chor{};
  }
  return Chor{};
}

TEST(ReconstructTest, EveryMechanismReturnsTheTargetRecord) {
  RngStream rng(26, 0);
  for (Mechanism m : kAllMechanisms) {
    for (std::size_t d : {2u, 4u, 6u}) {
      const SystemParams sp{.n = 64, .d = d, .d_a = 0, .u = 1, .b = 64};
      const Database master = Database::Random(sp.n, sp.record_bytes(), rng);
      std::vector<Database> dbs(d, master);
      for (int trial = 0; trial < 100; ++trial) {
        const std::size_t q = rng.UniformIndex(sp.n);
        const QueryPlan plan = make_plan(ParamsFor(m, d), q, sp, rng);
        EXPECT_EQ(execute_plan(plan, dbs, rng), master.At(q)) << mechanism_name(m);
      }
    }
  }
}

TEST(ReconstructTest, MissingOrMismatchedResponsesFail) {
  RngStream rng(27, 0);
  const SystemParams sp{.n = 16, .d = 3};
  const QueryPlan chor = gen_chor(1, sp, rng);
  EXPECT_THROW(reconstruct(chor, {}), ReconstructionError);
  std::vector<ServerResponse> wrong(3, RecordsResponse{});
  EXPECT_THROW(reconstruct(chor, wrong), ReconstructionError);
  const QueryPlan direct = gen_direct(1, 3, sp, rng);
  std::vector<ServerResponse> blocks(3, XorBlockResponse{Record::Zero(8)});
  EXPECT_THROW(reconstruct(direct, blocks), ReconstructionError);
}

TEST(MechanismNamesTest, RoundTrip) {
  for (Mechanism m : kAllMechanisms) EXPECT_EQ(parse_mechanism(mechanism_name(m)), m);
  EXPECT_THROW(parse_mechanism("bogus"), ParameterError);
}

}  // namespace
}  // namespace epir
