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

#ifndef EPIR_SERVER_HPP_
#define EPIR_SERVER_HPP_

#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/messages.hpp"

namespace epir {

// Answers one request against a read-only database. Every record touched,
// fetched or XORed, bumps the database's access counter by one.
inline ServerResponse handle(const Database& db, const ServerRequest& req) {
  return std::visit(
      [&](const auto& r) -> ServerResponse {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, FetchIndices>) {
          for (auto index : r.indices) {
            if (index >= db.size()) {
              throw RequestError("fetch index " + std::to_string(index) +
                                 " out of range [0, " + std::to_string(db.size()) + ")");
            }
          }
          RecordsResponse out;
          out.entries.reserve(r.indices.size());
          for (auto index : r.indices) out.entries.push_back({index, db.At(index)});
          db.AddAccesses(r.indices.size());
          return out;
        } else {
          if (r.selector.size() != db.size()) {
            throw RequestError("selector length " + std::to_string(r.selector.size()) +
                               " does not match n = " + std::to_string(db.size()));
          }
          Record acc = Record::Zero(db.record_bytes());
          std::uint64_t touched = 0;
          r.selector.ForEachSetBit([&](std::size_t i) {
            acc.XorWith(db.RecordBytes(i));
            ++touched;
          });
          db.AddAccesses(touched);
          return XorBlockResponse{std::move(acc)};
        }
      },
      req);
}

}  // namespace epir

#endif  // EPIR_SERVER_HPP_
