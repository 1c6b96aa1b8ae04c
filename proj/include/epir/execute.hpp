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

#ifndef EPIR_EXECUTE_HPP_
#define EPIR_EXECUTE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epir/anonymity.hpp"
#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/mechanisms.hpp"
#include "epir/messages.hpp"
#include "epir/rng.hpp"
#include "epir/server.hpp"

namespace epir {

namespace internal {

inline const Database& ServerAt(std::span<const Database> dbs, std::size_t server) {
  if (server >= dbs.size()) {
    throw ParameterError("plan addresses server " + std::to_string(server) + " but only " +
                         std::to_string(dbs.size()) + " exist");
  }
  return dbs[server];
}

}  // namespace internal

// Runs one round in which every user executes its plan. Plans with an
// anonymous transport share a single mixing batch: bundles enter as one
// element per user, separated requests as one element per request. Returns
// the reconstructed record of each user, in plan order.
inline std::vector<Record> execute_round(const std::vector<QueryPlan>& plans,
                                         std::span<const Database> dbs, RngStream& rng) {
  std::vector<std::vector<ServerResponse>> responses(plans.size());
  for (std::size_t user = 0; user < plans.size(); ++user) {
    responses[user].resize(plans[user].dispatches.size());
  }

  // Payload of an anonymous element: (dispatch index, dispatch) pairs.
  using Element = std::vector<std::pair<std::size_t, Dispatch>>;
  AnonBatch<Element> batch;
  for (std::size_t user = 0; user < plans.size(); ++user) {
    const QueryPlan& plan = plans[user];
    switch (plan.transport) {
      case Transport::kDirect:
        for (std::size_t k = 0; k < plan.dispatches.size(); ++k) {
          const Dispatch& dispatch = plan.dispatches[k];
          responses[user][k] = handle(internal::ServerAt(dbs, dispatch.server), dispatch.request);
        }
        break;
      case Transport::kAnonBundle: {
        Element bundle;
        for (std::size_t k = 0; k < plan.dispatches.size(); ++k) {
          bundle.emplace_back(k, plan.dispatches[k]);
        }
        batch.Submit(user, plan.dispatches.front().server, std::move(bundle));
        break;
      }
      case Transport::kAnonSeparated:
        for (std::size_t k = 0; k < plan.dispatches.size(); ++k) {
          batch.Submit(user, plan.dispatches[k].server, Element{{k, plan.dispatches[k]}});
        }
        break;
    }
  }

  if (batch.size() > 0) {
    using Reply = std::vector<std::pair<std::size_t, ServerResponse>>;
    std::vector<std::pair<std::size_t, Reply>> replies;
    for (auto& delivery : batch.MixAndDeliver(rng)) {
      Reply reply;
      for (const auto& [k, dispatch] : delivery.payload) {
        reply.emplace_back(k, handle(internal::ServerAt(dbs, dispatch.server), dispatch.request));
      }
      replies.emplace_back(delivery.slot, std::move(reply));
    }
    for (auto& [user, reply] : batch.RouteReplies(std::move(replies))) {
      for (auto& [k, response] : reply) responses[user][k] = std::move(response);
    }
  }

  std::vector<Record> out;
  out.reserve(plans.size());
  for (std::size_t user = 0; user < plans.size(); ++user) {
    out.push_back(reconstruct(plans[user], responses[user]));
  }
  return out;
}

inline Record execute_plan(const QueryPlan& plan, std::span<const Database> dbs,
                           RngStream& rng) {
  return execute_round({plan}, dbs, rng).front();
}

}  // namespace epir

#endif  // EPIR_EXECUTE_HPP_
