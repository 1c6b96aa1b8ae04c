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

// Framed binary protocol between clients and database servers.
//
//   frame   := "EPIR" | version (0x01) | type (1 byte) | length (u32 BE) | payload
//   0x01 FetchIndices  u32 count, count x u32 index
//   0x02 XorSelect     u32 n, ceil(n/8) bytes, bit k in byte k/8 at bit k%8
//   0x81 Records       u32 count, count x (u32 index, record bytes)
//   0x82 XorBlock      record bytes
//   0xFF Error         u16 code, UTF-8 message
//
// All integers are big-endian.

#ifndef EPIR_WIRE_HPP_
#define EPIR_WIRE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "epir/bit_vector.hpp"
#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/messages.hpp"

namespace epir::wire {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'E', 'P', 'I', 'R'};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 10;
// Large enough for a selector over 2^31 records or a few thousand 8 KiB
// records; anything bigger is refused before allocation.
inline constexpr std::uint32_t kMaxPayload = 256u << 20;

enum class MsgType : std::uint8_t {
  kFetchIndices = 0x01,
  kXorSelect = 0x02,
  kRecords = 0x81,
  kXorBlock = 0x82,
  kError = 0xFF,
};

enum class ErrorCode : std::uint16_t {
  kMalformed = 0x0001,
  kUnsupportedType = 0x0002,
  kBadRequest = 0x0003,
  kBadVersion = 0x0004,
  kTooLarge = 0x0005,
};

struct Frame {
  std::uint8_t type = 0;
  std::vector<std::uint8_t> payload;
  bool operator==(const Frame&) const = default;
};

struct ErrorPayload {
  std::uint16_t code = 0;
  std::string message;
  bool operator==(const ErrorPayload&) const = default;
};

struct Header {
  std::uint8_t version = 0;
  std::uint8_t type = 0;
  std::uint32_t length = 0;
};

namespace internal {

inline void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t GetU32(std::span<const std::uint8_t> in, std::size_t at) {
  return (std::uint32_t{in[at]} << 24) | (std::uint32_t{in[at + 1]} << 16) |
         (std::uint32_t{in[at + 2]} << 8) | std::uint32_t{in[at + 3]};
}

inline std::uint32_t CheckedU32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw WireError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace internal

// Parses and checks the fixed 10-byte header. Magic and version are
// validated; the type is not (unknown types are answered, not dropped).
inline Header decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw WireError("truncated frame header");
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (bytes[i] != kMagic[i]) throw WireError("bad frame magic");
  }
  Header h{bytes[4], bytes[5], internal::GetU32(bytes, 6)};
  if (h.version != kVersion) throw WireError("unsupported protocol version " + std::to_string(h.version));
  return h;
}

inline std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(kVersion);
  out.push_back(frame.type);
  internal::PutU32(out, internal::CheckedU32(frame.payload.size(), "payload length"));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

// Decodes exactly one frame occupying all of `bytes`.
inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const Header h = decode_header(bytes);
  if (bytes.size() - kHeaderSize != h.length) {
    throw WireError("frame length field " + std::to_string(h.length) + " does not match " +
                    std::to_string(bytes.size() - kHeaderSize) + " payload bytes");
  }
  return {h.type, std::vector<std::uint8_t>(bytes.begin() + kHeaderSize, bytes.end())};
}

inline Frame encode_request(const ServerRequest& request) {
  Frame frame;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, FetchIndices>) {
          frame.type = static_cast<std::uint8_t>(MsgType::kFetchIndices);
          internal::PutU32(frame.payload, internal::CheckedU32(r.indices.size(), "index count"));
          for (auto index : r.indices) internal::PutU32(frame.payload, index);
        } else {
          frame.type = static_cast<std::uint8_t>(MsgType::kXorSelect);
          internal::PutU32(frame.payload, internal::CheckedU32(r.selector.size(), "selector length"));
          const auto packed = r.selector.ToBytes();
          frame.payload.insert(frame.payload.end(), packed.begin(), packed.end());
        }
      },
      request);
  return frame;
}

inline ServerRequest decode_request(const Frame& frame) {
  const std::span<const std::uint8_t> p(frame.payload);
  if (p.size() < 4) throw WireError("request payload shorter than its count field");
  const std::uint32_t count = internal::GetU32(p, 0);
  switch (static_cast<MsgType>(frame.type)) {
    case MsgType::kFetchIndices: {
      if (p.size() != 4 + std::size_t{count} * 4) throw WireError("FetchIndices length mismatch");
      FetchIndices out;
      out.indices.reserve(count);
      for (std::uint32_t k = 0; k < count; ++k) out.indices.push_back(internal::GetU32(p, 4 + 4 * k));
      return out;
    }
    case MsgType::kXorSelect: {
      if (p.size() != 4 + (std::size_t{count} + 7) / 8) throw WireError("XorSelect length mismatch");
      try {
        return XorSelect{BitVector::FromBytes(p.subspan(4), count)};
      } catch (const ContractError& e) {
        throw WireError(std::string("XorSelect: ") + e.what());
      }
    }
    default:
      throw WireError("not a request type: " + std::to_string(frame.type));
  }
}

inline Frame encode_response(const ServerResponse& response) {
  Frame frame;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, RecordsResponse>) {
          frame.type = static_cast<std::uint8_t>(MsgType::kRecords);
          internal::PutU32(frame.payload, internal::CheckedU32(r.entries.size(), "record count"));
          for (const auto& entry : r.entries) {
            internal::PutU32(frame.payload, entry.index);
            const auto bytes = entry.record.bytes();
            frame.payload.insert(frame.payload.end(), bytes.begin(), bytes.end());
          }
        } else {
          frame.type = static_cast<std::uint8_t>(MsgType::kXorBlock);
          const auto bytes = r.block.bytes();
          frame.payload.assign(bytes.begin(), bytes.end());
        }
      },
      response);
  return frame;
}

// Record size is not carried on the wire; the caller supplies b/8.
inline ServerResponse decode_response(const Frame& frame, std::size_t record_bytes) {
  const std::span<const std::uint8_t> p(frame.payload);
  switch (static_cast<MsgType>(frame.type)) {
    case MsgType::kRecords: {
      if (p.size() < 4) throw WireError("Records payload shorter than its count field");
      const std::uint32_t count = internal::GetU32(p, 0);
      if (p.size() != 4 + std::size_t{count} * (4 + record_bytes)) {
        throw WireError("Records length mismatch");
      }
      RecordsResponse out;
      out.entries.reserve(count);
      std::size_t at = 4;
      for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint32_t index = internal::GetU32(p, at);
        at += 4;
        out.entries.push_back({index, Record(std::vector<std::uint8_t>(
                                          p.begin() + static_cast<std::ptrdiff_t>(at),
                                          p.begin() + static_cast<std::ptrdiff_t>(at + record_bytes)))});
        at += record_bytes;
      }
      return out;
    }
    case MsgType::kXorBlock:
      if (p.size() != record_bytes) throw WireError("XorBlock length mismatch");
      return XorBlockResponse{Record(std::vector<std::uint8_t>(p.begin(), p.end()))};
    default:
      throw WireError("not a response type: " + std::to_string(frame.type));
  }
}

inline Frame encode_error(ErrorCode code, const std::string& message) {
  Frame frame;
  frame.type = static_cast<std::uint8_t>(MsgType::kError);
  const auto c = static_cast<std::uint16_t>(code);
  frame.payload.push_back(static_cast<std::uint8_t>(c >> 8));
  frame.payload.push_back(static_cast<std::uint8_t>(c));
  frame.payload.insert(frame.payload.end(), message.begin(), message.end());
  return frame;
}

inline ErrorPayload decode_error(const Frame& frame) {
  if (frame.type != static_cast<std::uint8_t>(MsgType::kError)) throw WireError("not an Error frame");
  if (frame.payload.size() < 2) throw WireError("Error payload shorter than its code");
  return {static_cast<std::uint16_t>((frame.payload[0] << 8) | frame.payload[1]),
          std::string(frame.payload.begin() + 2, frame.payload.end())};
}

}  // namespace epir::wire

#endif  // EPIR_WIRE_HPP_
