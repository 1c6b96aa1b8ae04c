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

#include "epir/anonymity.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "epir/error.hpp"
#include "epir/rng.hpp"

namespace epir {
namespace {

TEST(AnonBatchTest, SingleMessagePassesThrough) {
  RngStream rng(1, 0);
  AnonBatch<std::string> batch;
  batch.Submit(7, 2, "hello");
  const auto out = batch.MixAndDeliver(rng);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].slot, 0u);
  EXPECT_EQ(out[0].server, 2u);
  EXPECT_EQ(out[0].payload, "hello");
  const auto routed = batch.RouteReplies<std::string>({{0, "reply"}});
  ASSERT_EQ(routed.size(), 1u);
  EXPECT_EQ(routed[0], (std::pair<std::size_t, std::string>{7, "reply"}));
}

TEST(AnonBatchTest, EmptyBatchIsParameterError) {
  RngStream rng(2, 0);
  AnonBatch<int> batch;
  EXPECT_THROW(batch.MixAndDeliver(rng), ParameterError);
}

TEST(AnonBatchTest, ThreeBatchOrderingsAreUniform) {
  RngStream rng(3, 0);
  constexpr int kTrials = 60000;
  std::map<std::vector<int>, int> counts;
  for (int trial = 0; trial < kTrials; ++trial) {
    AnonBatch<int> batch;
    for (int user = 0; user < 3; ++user) batch.Submit(user, 0, user);
    std::vector<int> order;
    for (const auto& delivery : batch.MixAndDeliver(rng)) order.push_back(delivery.payload);
    ++counts[order];
  }
  ASSERT_EQ(counts.size(), 6u);
  double chi2 = 0.0;
  for (const auto& [order, c] : counts) chi2 += (c - kTrials / 6.0) * (c - kTrials / 6.0) / (kTrials / 6.0);
  EXPECT_LT(chi2, 20.52);  // chi-square, 5 dof, p = 0.001
}

TEST(AnonBatchTest, PayloadMultisetIsConserved) {
  RngStream rng(4, 0);
  for (int trial = 0; trial < 100; ++trial) {
    AnonBatch<int> batch;
    std::vector<std::pair<std::size_t, int>> in;
    const std::size_t size = 1 + rng.UniformIndex(20);
    for (std::size_t k = 0; k < size; ++k) {
      const auto server = rng.UniformIndex(4);
      const int payload = static_cast<int>(rng.UniformIndex(5));
      batch.Submit(k, server, payload);
      in.emplace_back(server, payload);
    }
    std::vector<std::pair<std::size_t, int>> out;
    for (const auto& delivery : batch.MixAndDeliver(rng)) out.emplace_back(delivery.server, delivery.payload);
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    EXPECT_EQ(in, out);
  }
}

TEST(AnonBatchTest, TaggedRoundTripReachesEverySender) {
  RngStream rng(5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    AnonBatch<std::string> batch;
    const std::size_t users = 1 + rng.UniformIndex(10);
    for (std::size_t user = 0; user < users; ++user) batch.Submit(user, 0, "req" + std::to_string(user));
    std::vector<std::pair<std::size_t, std::string>> replies;
    for (const auto& delivery : batch.MixAndDeliver(rng)) {
      replies.emplace_back(delivery.slot, "ans:" + delivery.payload);
    }
    std::reverse(replies.begin(), replies.end());
    const auto routed = batch.RouteReplies(std::move(replies));
    ASSERT_EQ(routed.size(), users);
    for (std::size_t k = 0; k < users; ++k) {
      EXPECT_EQ(routed[k].first, k);
      EXPECT_EQ(routed[k].second, "ans:req" + std::to_string(k));
    }
  }
}

TEST(AnonBatchTest, RoutingErrors) {
  RngStream rng(6, 0);
  AnonBatch<int> batch;
  batch.Submit(0, 0, 10);
  batch.Submit(1, 0, 11);
  EXPECT_THROW(batch.RouteReplies<int>({{0, 1}, {1, 2}}), RoutingError);  // before delivery
  batch.MixAndDeliver(rng);
  EXPECT_THROW(batch.RouteReplies<int>({{0, 1}}), RoutingError);           // missing
  EXPECT_THROW(batch.RouteReplies<int>({{0, 1}, {5, 2}}), RoutingError);   // unknown slot
  EXPECT_THROW(batch.RouteReplies<int>({{0, 1}, {0, 2}}), RoutingError);   // duplicate
  EXPECT_THROW(batch.Submit(2, 0, 12), ContractError);
}

TEST(AnonBatchTest, ProjectionIgnoresUserLabels) {
  // Relabeling the users leaves the distribution of delivered sequences
  // unchanged; with the same stream it is even identical.
  for (int trial = 0; trial < 50; ++trial) {
    RngStream a(7, static_cast<std::uint64_t>(trial));
    RngStream b(7, static_cast<std::uint64_t>(trial));
    AnonBatch<int> first;
    AnonBatch<int> second;
    for (int k = 0; k < 6; ++k) {
      first.Submit(static_cast<std::size_t>(k), static_cast<std::size_t>(k % 2), k);
      second.Submit(static_cast<std::size_t>(100 - k), static_cast<std::size_t>(k % 2), k);
    }
    const auto x = first.MixAndDeliver(a);
    const auto y = second.MixAndDeliver(b);
    for (std::size_t s = 0; s < x.size(); ++s) {
      EXPECT_EQ(x[s].server, y[s].server);
      EXPECT_EQ(x[s].payload, y[s].payload);
    }
  }
}

}  // namespace
}  // namespace epir
