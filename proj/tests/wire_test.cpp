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

#include "epir/wire.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "epir/error.hpp"
#include "epir/rng.hpp"

namespace epir::wire {
namespace {

std::vector<std::uint8_t> Bytes(std::initializer_list<int> values) {
  std::vector<std::uint8_t> out;
  for (int v : values) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

ServerRequest RandomRequest(RngStream& rng) {
  if (rng.Bernoulli(0.5)) {
    FetchIndices f;
    const std::size_t k = rng.UniformIndex(20);
    for (std::size_t i = 0; i < k; ++i) f.indices.push_back(static_cast<std::uint32_t>(rng()));
    return f;
  }
  const std::size_t n = rng.UniformIndex(300);
  BitVector sel(n);
  for (std::size_t i = 0; i < n; ++i) sel.Set(i, rng.Bernoulli(0.5));
  return XorSelect{sel};
}

ServerResponse RandomResponse(RngStream& rng, std::size_t record_bytes) {
  auto record = [&] {
    std::vector<std::uint8_t> data(record_bytes);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    return Record(std::move(data));
  };
  if (rng.Bernoulli(0.5)) return XorBlockResponse{record()};
  RecordsResponse r;
  const std::size_t k = rng.UniformIndex(10);
  for (std::size_t i = 0; i < k; ++i) r.entries.push_back({static_cast<std::uint32_t>(rng()), record()});
  return r;
}

TEST(WireFormatTest, FetchRequestLayout) {
  const auto bytes = encode_frame(encode_request(FetchIndices{{1, 0x01020304}}));
  EXPECT_EQ(bytes, Bytes({'E', 'P', 'I', 'R', 0x01, 0x01, 0, 0, 0, 12, 0, 0, 0, 2, 0, 0, 0, 1, 1, 2, 3, 4}));
}

TEST(WireFormatTest, XorSelectLayoutIsLsbFirst) {
  BitVector sel(10);
  sel.Set(0, true);
  sel.Set(9, true);
  const auto bytes = encode_frame(encode_request(XorSelect{sel}));
  EXPECT_EQ(bytes, Bytes({'E', 'P', 'I', 'R', 0x01, 0x02, 0, 0, 0, 6, 0, 0, 0, 10, 0x01, 0x02}));
}

TEST(WireFormatTest, ErrorLayout) {
  const Frame f = encode_error(ErrorCode::kBadRequest, "no");
  EXPECT_EQ(f.type, 0xFF);
  EXPECT_EQ(f.payload, Bytes({0x00, 0x03, 'n', 'o'}));
  const ErrorPayload e = decode_error(f);
  EXPECT_EQ(e.code, 3);
  EXPECT_EQ(e.message, "no");
}

TEST(WireFormatTest, HeaderChecks) {
  EXPECT_THROW(decode_header(Bytes({'E', 'P', 'I'})), WireError);
  EXPECT_THROW(decode_header(Bytes({'X', 'P', 'I', 'R', 1, 1, 0, 0, 0, 0})), WireError);
  EXPECT_THROW(decode_header(Bytes({'E', 'P', 'I', 'R', 2, 1, 0, 0, 0, 0})), WireError);
  const Header h = decode_header(Bytes({'E', 'P', 'I', 'R', 1, 0x7F, 0, 1, 0, 0}));
  EXPECT_EQ(h.type, 0x7F);
  EXPECT_EQ(h.length, 65536u);
}

TEST(WireFormatTest, LengthMismatchesAreRejected) {
  EXPECT_THROW(decode_frame(Bytes({'E', 'P', 'I', 'R', 1, 1, 0, 0, 0, 5, 0})), WireError);
  Frame bad{0x01, Bytes({0, 0, 0, 2, 0, 0, 0, 1})};
  EXPECT_THROW(decode_request(bad), WireError);
  Frame padding{0x02, Bytes({0, 0, 0, 3, 0xFF})};  // bits beyond the selector length
  EXPECT_THROW(decode_request(padding), WireError);
  EXPECT_THROW(decode_request(Frame{0x81, Bytes({0, 0, 0, 0})}), WireError);
  EXPECT_THROW(decode_response(Frame{0x82, Bytes({1, 2, 3})}, 4), WireError);
  EXPECT_THROW(decode_response(Frame{0x81, Bytes({0, 0, 0, 1, 0, 0, 0, 0, 1})}, 4), WireError);
}

TEST(WireRoundTripTest, RandomRequestsAndResponses) {
  RngStream rng(1, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    const ServerRequest request = RandomRequest(rng);
    const Frame f = decode_frame(encode_frame(encode_request(request)));
    ASSERT_EQ(decode_request(f), request);
    const std::size_t rb = 1 + rng.UniformIndex(16);
    const ServerResponse response = RandomResponse(rng, rb);
    ASSERT_EQ(decode_response(decode_frame(encode_frame(encode_response(response))), rb), response);
  }
}

TEST(WireRoundTripTest, RandomBytesNeverEscapeAsOtherExceptions) {
  RngStream rng(2, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<std::uint8_t> bytes(rng.UniformIndex(40));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    if (bytes.size() >= 6 && rng.Bernoulli(0.7)) {
      bytes[0] = 'E';
      bytes[1] = 'P';
      bytes[2] = 'I';
      bytes[3] = 'R';
      bytes[4] = 1;
    }
    try {
      const Frame f = decode_frame(bytes);
      decode_request(f);
    } catch (const WireError&) {
    }
  }
}

}  // namespace
}  // namespace epir::wire
