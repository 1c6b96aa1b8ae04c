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

// Ideal anonymity system: a batch of user messages is delivered under a
// fresh, secret, uniformly random permutation, and replies addressed to exit
// slots travel back through the inverse permutation.

#ifndef EPIR_ANONYMITY_HPP_
#define EPIR_ANONYMITY_HPP_

#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epir/error.hpp"
#include "epir/rng.hpp"

namespace epir {

template <typename Payload>
struct Delivery {
  std::size_t slot = 0;  // exit-slot id, the delivery position
  std::size_t server = 0;
  Payload payload;
};

template <typename Payload>
class AnonBatch {
 public:
  struct Inbound {
    std::size_t user = 0;
    std::size_t server = 0;
    Payload payload;
  };

  void Submit(std::size_t user, std::size_t server, Payload payload) {
    if (mixed_) throw ContractError("AnonBatch: submit after mixing");
    inbound_.push_back({user, server, std::move(payload)});
  }

  std::size_t size() const { return inbound_.size(); }

  // Delivers every message under a fresh uniform permutation. The returned
  // view carries no user ids.
  std::vector<Delivery<Payload>> MixAndDeliver(RngStream& rng) {
    if (inbound_.empty()) throw ParameterError("AnonBatch: empty batch");
    if (mixed_) throw ContractError("AnonBatch: batch already mixed");
    slot_to_inbound_.resize(inbound_.size());
    std::iota(slot_to_inbound_.begin(), slot_to_inbound_.end(), std::size_t{0});
    for (std::size_t i = slot_to_inbound_.size(); i > 1; --i) {
      std::swap(slot_to_inbound_[i - 1], slot_to_inbound_[rng.UniformIndex(i)]);
    }
    mixed_ = true;
    std::vector<Delivery<Payload>> out;
    out.reserve(inbound_.size());
    for (std::size_t slot = 0; slot < slot_to_inbound_.size(); ++slot) {
      const Inbound& msg = inbound_[slot_to_inbound_[slot]];
      out.push_back({slot, msg.server, msg.payload});
    }
    return out;
  }

  // Routes exactly one reply per exit slot back to the originating user.
  // Output is in submission order.
  template <typename Reply>
  std::vector<std::pair<std::size_t, Reply>> RouteReplies(
      std::vector<std::pair<std::size_t, Reply>> replies) const {
    if (!mixed_) throw RoutingError("AnonBatch: replies before delivery");
    std::vector<std::optional<Reply>> by_inbound(inbound_.size());
    for (auto& [slot, reply] : replies) {
      if (slot >= slot_to_inbound_.size()) {
        throw RoutingError("unknown exit slot " + std::to_string(slot));
      }
      auto& cell = by_inbound[slot_to_inbound_[slot]];
      if (cell) throw RoutingError("duplicate reply for slot " + std::to_string(slot));
      cell = std::move(reply);
    }
    std::vector<std::pair<std::size_t, Reply>> out;
    out.reserve(inbound_.size());
    for (std::size_t k = 0; k < inbound_.size(); ++k) {
      if (!by_inbound[k]) {
        throw RoutingError("missing reply for a delivered message");
      }
      out.emplace_back(inbound_[k].user, std::move(*by_inbound[k]));
    }
    return out;
  }

 private:
  std::vector<Inbound> inbound_;
  std::vector<std::size_t> slot_to_inbound_;
  bool mixed_ = false;
};

}  // namespace epir

#endif  // EPIR_ANONYMITY_HPP_
