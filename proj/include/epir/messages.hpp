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

#ifndef EPIR_MESSAGES_HPP_
#define EPIR_MESSAGES_HPP_

#include <cstdint>
#include <variant>
#include <vector>

#include "epir/bit_vector.hpp"
#include "epir/core.hpp"

namespace epir {

// Plain record fetch of the listed indices (dummy-based mechanisms).
struct FetchIndices {
  std::vector<std::uint32_t> indices;
  friend bool operator==(const FetchIndices&, const FetchIndices&) = default;
};

// XOR of all records whose selector bit is set (Chor-style mechanisms).
struct XorSelect {
  BitVector selector;
  friend bool operator==(const XorSelect&, const XorSelect&) = default;
};

using ServerRequest = std::variant<FetchIndices, XorSelect>;

struct IndexedRecord {
  std::uint32_t index = 0;
  Record record;
  friend bool operator==(const IndexedRecord&, const IndexedRecord&) = default;
};

struct RecordsResponse {
  std::vector<IndexedRecord> entries;
  friend bool operator==(const RecordsResponse&, const RecordsResponse&) = default;
};

struct XorBlockResponse {
  Record block;
  friend bool operator==(const XorBlockResponse&, const XorBlockResponse&) = default;
};

using ServerResponse = std::variant<RecordsResponse, XorBlockResponse>;

}  // namespace epir

#endif  // EPIR_MESSAGES_HPP_
