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

// The adversary distinguishability game. The adversary hands the target user
// two candidate queries Q_i and Q_j and every other user the query Q_0, then
// watches the corrupt servers and the metadata of everything else. A
// mechanism is epsilon-private when no observation is more than e^epsilon
// times likelier under one candidate than under the other.
//
// Three estimators live here:
//   * run_trial / monte_carlo_estimate: sampled traces reduced to a
//     sufficient statistic, tallied per arm;
//   * exact_oracle: enumeration of all mechanism randomness for tiny
//     instances, on either full observations or the reduced statistic;
//   * subset_delta_estimate / naive_composition_frequencies: frequencies of
//     the catastrophic events behind the delta bounds.

#ifndef EPIR_GAME_HPP_
#define EPIR_GAME_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "epir/analysis.hpp"
#include "epir/anonymity.hpp"
#include "epir/bit_vector.hpp"
#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/mechanisms.hpp"
#include "epir/messages.hpp"
#include "epir/rng.hpp"

namespace epir {

struct GameConfig {
  MechanismParams mechanism;
  SystemParams params;
  std::size_t q_i = 0;
  std::size_t q_j = 1;
  std::size_t q_0 = 2;
  std::size_t target_choice = 0;  // 0 runs q_i, 1 runs q_j
  std::size_t trials = 1;
  std::vector<std::size_t> corrupt;  // |corrupt| = d_a

  // Corrupt set defaults to servers 0 .. d_a - 1.
  static GameConfig Make(MechanismParams mechanism, SystemParams params, std::size_t q_i,
                         std::size_t q_j, std::size_t q_0) {
    GameConfig cfg;
    cfg.mechanism = std::move(mechanism);
    cfg.params = params;
    cfg.q_i = q_i;
    cfg.q_j = q_j;
    cfg.q_0 = q_0;
    cfg.corrupt.resize(params.d_a);
    std::iota(cfg.corrupt.begin(), cfg.corrupt.end(), std::size_t{0});
    return cfg;
  }

  std::size_t target_query() const { return target_choice == 0 ? q_i : q_j; }

  bool IsCorrupt(std::size_t server) const {
    return std::find(corrupt.begin(), corrupt.end(), server) != corrupt.end();
  }

  void Validate() const {
    params.Validate();
    validate_mechanism(mechanism, params);
    if (q_i == q_j) throw ParameterError("game: q_i must differ from q_j");
    if (q_i >= params.n || q_j >= params.n || q_0 >= params.n) {
      throw ParameterError("game: queries must lie in [0, n)");
    }
    if (params.u > 1 && (q_0 == q_i || q_0 == q_j)) {
      throw ParameterError("game: q_0 must differ from q_i and q_j");
    }
    if (target_choice > 1) throw ParameterError("game: target_choice must be 0 or 1");
    if (trials < 1) throw ParameterError("game: trials must be >= 1");
    if (corrupt.size() != params.d_a) {
      throw ParameterError("game: corrupt set size must equal d_a");
    }
    std::vector<bool> seen(params.d, false);
    for (std::size_t s : corrupt) {
      if (s >= params.d || seen[s]) throw ParameterError("game: invalid corrupt set");
      seen[s] = true;
    }
  }
};

// One request as received by a corrupt server. `origin` is the sending user
// when the mechanism is not anonymous, otherwise the anonymity exit slot.
struct CorruptView {
  std::size_t origin = 0;
  std::size_t server = 0;
  ServerRequest request;
};

// Everything the adversary sees in one round.
struct ObservationTrace {
  bool linked = true;  // origins are user ids
  std::vector<CorruptView> corrupt_views;
  std::vector<std::size_t> honest_counts;  // messages per honest server (0 at corrupt ones)
  std::vector<std::size_t> target_sends;   // target's messages per server; empty if anonymous
  std::size_t batch_size = 0;              // anonymity batch size, 0 without anonymity
};

using Statistic = std::vector<std::int64_t>;

namespace internal {

inline ObservationTrace ObserveRound(const GameConfig& cfg, const std::vector<QueryPlan>& plans,
                                     RngStream& rng) {
  ObservationTrace trace;
  trace.honest_counts.assign(cfg.params.d, 0);
  const Transport transport = plans.front().transport;
  auto observe = [&](std::size_t origin, const Dispatch& dispatch) {
    if (cfg.IsCorrupt(dispatch.server)) {
      trace.corrupt_views.push_back({origin, dispatch.server, dispatch.request});
    } else {
      ++trace.honest_counts[dispatch.server];
    }
  };
  if (transport == Transport::kDirect) {
    trace.linked = true;
    trace.target_sends.assign(cfg.params.d, 0);
    for (const Dispatch& dispatch : plans.front().dispatches) ++trace.target_sends[dispatch.server];
    for (std::size_t user = 0; user < plans.size(); ++user) {
      for (const Dispatch& dispatch : plans[user].dispatches) observe(user, dispatch);
    }
    return trace;
  }
  trace.linked = false;
  AnonBatch<std::vector<Dispatch>> batch;
  for (std::size_t user = 0; user < plans.size(); ++user) {
    if (transport == Transport::kAnonBundle) {
      batch.Submit(user, plans[user].dispatches.front().server, plans[user].dispatches);
    } else {
      for (const Dispatch& dispatch : plans[user].dispatches) {
        batch.Submit(user, dispatch.server, {dispatch});
      }
    }
  }
  trace.batch_size = batch.size();
  for (const auto& delivery : batch.MixAndDeliver(rng)) {
    for (const Dispatch& dispatch : delivery.payload) observe(delivery.slot, dispatch);
  }
  return trace;
}

inline bool Requests(const ServerRequest& request, std::size_t index) {
  const auto& fetch = std::get<FetchIndices>(request);
  return std::find(fetch.indices.begin(), fetch.indices.end(), index) != fetch.indices.end();
}

inline bool SelectorBit(const ServerRequest& request, std::size_t index) {
  return std::get<XorSelect>(request).selector.Get(index);
}

// Per-origin (saw Q_i, saw Q_j) or (parity i, parity j) pattern counts over
// all origins, as counts of the (1,0), (0,1) and (1,1) patterns.
template <typename Bit>
Statistic PatternCounts(const ObservationTrace& trace, std::size_t q_i, std::size_t q_j,
                        bool accumulate_xor, Bit bit) {
  std::map<std::size_t, std::pair<int, int>> per_origin;
  for (const CorruptView& view : trace.corrupt_views) {
    auto& [a, b] = per_origin[view.origin];
    const int bi = bit(view.request, q_i) ? 1 : 0;
    const int bj = bit(view.request, q_j) ? 1 : 0;
    if (accumulate_xor) {
      a ^= bi;
      b ^= bj;
    } else {
      a |= bi;
      b |= bj;
    }
  }
  Statistic counts(3, 0);
  for (const auto& [origin, pattern] : per_origin) {
    if (pattern == std::pair{1, 0}) ++counts[0];
    if (pattern == std::pair{0, 1}) ++counts[1];
    if (pattern == std::pair{1, 1}) ++counts[2];
  }
  return counts;
}

}  // namespace internal

// Plays one round: the target runs its chosen query, every other user runs
// Q_0, and the adversary's view is returned.
inline ObservationTrace run_trial(const GameConfig& cfg, RngStream& rng) {
  std::vector<QueryPlan> plans;
  plans.reserve(cfg.params.u);
  plans.push_back(make_plan(cfg.mechanism, cfg.target_query(), cfg.params, rng));
  for (std::size_t user = 1; user < cfg.params.u; ++user) {
    plans.push_back(make_plan(cfg.mechanism, cfg.q_0, cfg.params, rng));
  }
  return internal::ObserveRound(cfg, plans, rng);
}

// Reduces a trace to the statistic the likelihood ratio depends on:
//   naive dummy, direct:   (target's corrupt views contain Q_i, contain Q_j)
//   naive anonymous:       sorted multiset of indices seen at corrupt servers
//   bundled anonymous:     counts of exit slots showing only Q_i, only Q_j, both
//   separated anonymous:   (# Q_i messages, # Q_j messages) at corrupt servers
//   sparse:                parities of the target's observed columns i and j
//   anonymous sparse:      counts of exit slots with parity pattern (1,0), (0,1), (1,1)
//   subset, chor:          (1, revealed index) when every contacted server is
//                          corrupt, else (0, parity i, parity j)
inline Statistic observation_statistic(const ObservationTrace& trace, const GameConfig& cfg) {
  const std::size_t qi = cfg.q_i;
  const std::size_t qj = cfg.q_j;
  switch (mechanism_of(cfg.mechanism)) {
    case Mechanism::kNaiveDummy:
    case Mechanism::kDirect: {
      Statistic seen{0, 0};
      for (const CorruptView& view : trace.corrupt_views) {
        if (view.origin != 0) continue;
        if (internal::Requests(view.request, qi)) seen[0] = 1;
        if (internal::Requests(view.request, qj)) seen[1] = 1;
      }
      return seen;
    }
    case Mechanism::kNaiveAnon: {
      Statistic indices;
      for (const CorruptView& view : trace.corrupt_views) {
        for (auto index : std::get<FetchIndices>(view.request).indices) {
          indices.push_back(index);
        }
      }
      std::sort(indices.begin(), indices.end());
      return indices;
    }
    case Mechanism::kBundledAnon:
      return internal::PatternCounts(trace, qi, qj, false, internal::Requests);
    case Mechanism::kSeparatedAnon: {
      Statistic counts{0, 0};
      for (const CorruptView& view : trace.corrupt_views) {
        if (internal::Requests(view.request, qi)) ++counts[0];
        if (internal::Requests(view.request, qj)) ++counts[1];
      }
      return counts;
    }
    case Mechanism::kSparse: {
      Statistic parity{0, 0};
      for (const CorruptView& view : trace.corrupt_views) {
        if (view.origin != 0) continue;
        parity[0] ^= internal::SelectorBit(view.request, qi) ? 1 : 0;
        parity[1] ^= internal::SelectorBit(view.request, qj) ? 1 : 0;
      }
      return parity;
    }
    case Mechanism::kAnonSparse:
      return internal::PatternCounts(trace, qi, qj, true, internal::SelectorBit);
    case Mechanism::kSubset:
    case Mechanism::kChor: {
      bool all_corrupt = true;
      for (std::size_t s = 0; s < trace.target_sends.size(); ++s) {
        if (trace.target_sends[s] > 0 && !cfg.IsCorrupt(s)) all_corrupt = false;
      }
      std::optional<BitVector> combined;
      for (const CorruptView& view : trace.corrupt_views) {
        if (view.origin != 0) continue;
        const BitVector& selector = std::get<XorSelect>(view.request).selector;
        if (combined) {
          *combined ^= selector;
        } else {
          combined = selector;
        }
      }
      if (all_corrupt && combined) {
        Statistic revealed{1};
        combined->ForEachSetBit([&](std::size_t i) { revealed.push_back(static_cast<std::int64_t>(i)); });
        return revealed;
      }
      if (!combined) return {0, 0, 0};
      return {0, combined->Get(qi) ? 1 : 0, combined->Get(qj) ? 1 : 0};
    }
  }
  return {};
}

// Full observation key for the exact oracle. For XOR requests only columns
// q_i and q_j are kept: every other column is drawn independently with the
// same law under both candidates, so it cancels from every likelihood ratio.
inline Statistic full_observation_key(const ObservationTrace& trace, const GameConfig& cfg) {
  Statistic key;
  for (std::size_t s = 0; s < trace.target_sends.size(); ++s) {
    key.push_back(static_cast<std::int64_t>(trace.target_sends[s]));
  }
  key.push_back(-1);
  for (const CorruptView& view : trace.corrupt_views) {
    if (trace.linked && view.origin != 0) continue;
    key.push_back(static_cast<std::int64_t>(view.origin));
    key.push_back(static_cast<std::int64_t>(view.server));
    if (const auto* fetch = std::get_if<FetchIndices>(&view.request)) {
      key.push_back(static_cast<std::int64_t>(fetch->indices.size()));
      for (auto index : fetch->indices) key.push_back(index);
    } else {
      const BitVector& selector = std::get<XorSelect>(view.request).selector;
      key.push_back(selector.Get(cfg.q_i) ? 1 : 0);
      key.push_back(selector.Get(cfg.q_j) ? 1 : 0);
    }
    key.push_back(-2);
  }
  return key;
}

struct ClassTally {
  double given_qi = 0.0;  // count (Monte Carlo) or probability (exact)
  double given_qj = 0.0;
};

struct LikelihoodReport {
  std::map<Statistic, ClassTally> classes;
  double max_ratio = 1.0;          // +inf when a one-sided class exists (exact)
  double epsilon_empirical = 0.0;  // ln(max_ratio)
  double sigma = 0.0;              // std. error of epsilon_empirical (Monte Carlo)
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<Statistic> argmax;
  std::optional<Statistic> zero_support_witness;
  double one_sided_mass = 0.0;       // exact: largest per-arm mass on one-sided classes
  double two_sided_max_ratio = 1.0;  // exact: max ratio over classes seen in both arms
  bool exact = false;
  std::uint64_t trials_per_arm = 0;
};

inline constexpr std::uint64_t kMinTrialsPerArm = 1000;

// Tallies the statistic over trials_per_arm rounds with the target running
// Q_i and as many with Q_j. Ratios use +1 smoothing per class and arm;
// zero-support detection runs on the raw counts.
inline LikelihoodReport monte_carlo_estimate(const GameConfig& cfg, std::uint64_t trials_per_arm,
                                             RngStream& rng) {
  cfg.Validate();
  if (trials_per_arm < kMinTrialsPerArm) {
    throw ParameterError("monte_carlo_estimate: need at least 1000 trials per arm");
  }
  LikelihoodReport report;
  report.trials_per_arm = trials_per_arm;
  for (std::size_t arm = 0; arm < 2; ++arm) {
    GameConfig arm_cfg = cfg;
    arm_cfg.target_choice = arm;
    RngStream arm_rng = rng.Derive(arm);
    for (std::uint64_t t = 0; t < trials_per_arm; ++t) {
      const Statistic stat = observation_statistic(run_trial(arm_cfg, arm_rng), arm_cfg);
      ClassTally& tally = report.classes[stat];
      (arm == 0 ? tally.given_qi : tally.given_qj) += 1.0;
    }
  }

  const double witness_floor =
      std::max(10.0, static_cast<double>(trials_per_arm) / 1000.0);
  double best_witness = 0.0;
  double best = -1.0;
  for (const auto& [stat, tally] : report.classes) {
    const double a = tally.given_qi;
    const double b = tally.given_qj;
    const double one_sided = (a == 0.0) ? b : (b == 0.0 ? a : 0.0);
    if (one_sided >= witness_floor && one_sided > best_witness) {
      best_witness = one_sided;
      report.zero_support_witness = stat;
    }
    const double log_ratio = std::fabs(std::log((a + 1.0) / (b + 1.0)));
    if (log_ratio > best) {
      best = log_ratio;
      report.argmax = stat;
      report.sigma = std::sqrt(1.0 / (a + 1.0) + 1.0 / (b + 1.0));
    }
  }
  report.epsilon_empirical = best;
  report.max_ratio = std::exp(best);
  report.ci_low = std::max(0.0, best - 1.96 * report.sigma);
  report.ci_high = best + 1.96 * report.sigma;
  return report;
}

enum class ObservationMode { kFull, kReduced };

namespace internal {

inline constexpr double kMaxEnumeration = 4e6;

inline double Binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

inline void CheckEnumerationSize(double outcomes, const std::string& what) {
  if (outcomes > kMaxEnumeration) {
    std::ostringstream msg;
    msg << "exact oracle: " << what << " needs " << std::setprecision(3) << outcomes
        << " outcomes per arm, limit " << kMaxEnumeration
        << "; shrink n, p or d, or use monte_carlo_estimate";
    throw SizeError(msg.str());
  }
}

// Calls fn(subset) for every k-subset of `pool`, in lexicographic order.
template <typename Fn>
void ForEachCombination(const std::vector<std::uint32_t>& pool, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<std::uint32_t> pick(k);
  if (k > pool.size()) return;
  while (true) {
    for (std::size_t i = 0; i < k; ++i) pick[i] = pool[idx[i]];
    fn(pick);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// All d-bit columns of the given parity with their Bernoulli(theta) weight,
// normalized over that parity class by enumeration.
inline std::vector<std::pair<std::vector<bool>, double>> EnumerateColumns(std::size_t d,
                                                                          double theta,
                                                                          bool odd) {
  std::vector<std::pair<std::vector<bool>, double>> out;
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    const auto weight = static_cast<std::size_t>(std::popcount(mask));
    if ((weight % 2 == 1) != odd) continue;
    std::vector<bool> bits(d);
    for (std::size_t r = 0; r < d; ++r) bits[r] = (mask >> r) & 1U;
    const double pr = std::pow(theta, static_cast<double>(weight)) *
                      std::pow(1.0 - theta, static_cast<double>(d - weight));
    out.emplace_back(std::move(bits), pr);
    total += pr;
  }
  for (auto& entry : out) entry.second /= total;
  return out;
}

// Enumerates (trace, probability) outcomes of one arm; fn(trace, pr).
template <typename Fn>
void EnumerateArm(const GameConfig& cfg, std::size_t target, Fn&& fn) {
  const SystemParams& sp = cfg.params;
  const Mechanism mech = mechanism_of(cfg.mechanism);
  auto fetch_trace = [&](const std::vector<Dispatch>& dispatches) {
    ObservationTrace trace;
    trace.honest_counts.assign(sp.d, 0);
    trace.target_sends.assign(sp.d, 0);
    for (const Dispatch& dispatch : dispatches) {
      ++trace.target_sends[dispatch.server];
      if (cfg.IsCorrupt(dispatch.server)) {
        trace.corrupt_views.push_back({0, dispatch.server, dispatch.request});
      } else {
        ++trace.honest_counts[dispatch.server];
      }
    }
    return trace;
  };

  switch (mech) {
    case Mechanism::kNaiveDummy:
    case Mechanism::kDirect: {
      const std::size_t p = mech == Mechanism::kNaiveDummy
                                ? std::get<NaiveDummy>(cfg.mechanism).p
                                : std::get<Direct>(cfg.mechanism).p;
      const PopOrder order = mech == Mechanism::kDirect
                                 ? std::get<Direct>(cfg.mechanism).pop_order
                                 : PopOrder::kAscending;
      const std::size_t d = mech == Mechanism::kNaiveDummy ? 1 : sp.d;
      double orders = 1.0;
      if (order == PopOrder::kShuffled) {
        for (std::size_t k = 2; k <= p; ++k) orders *= static_cast<double>(k);
      }
      const double sets = Binomial(sp.n - 1, p - 1);
      CheckEnumerationSize(sets * orders, "dummy request sets x pop orders");
      std::vector<std::uint32_t> pool;
      for (std::size_t i = 0; i < sp.n; ++i) {
        if (i != target) pool.push_back(static_cast<std::uint32_t>(i));
      }
      const double pr = 1.0 / (sets * orders);
      ForEachCombination(pool, p - 1, [&](const std::vector<std::uint32_t>& dummies) {
        std::vector<std::uint32_t> req = dummies;
        req.push_back(static_cast<std::uint32_t>(target));
        std::sort(req.begin(), req.end());
        do {
          const std::size_t per_server = p / d;
          std::vector<Dispatch> dispatches;
          for (std::size_t s = 0; s < d; ++s) {
            std::vector<std::uint32_t> chunk(req.begin() + static_cast<std::ptrdiff_t>(s * per_server),
                                             req.begin() + static_cast<std::ptrdiff_t>((s + 1) * per_server));
            std::sort(chunk.begin(), chunk.end());
            dispatches.push_back({s, FetchIndices{std::move(chunk)}});
          }
          fn(fetch_trace(dispatches), pr);
        } while (order == PopOrder::kShuffled && std::next_permutation(req.begin(), req.end()));
      });
      return;
    }
    case Mechanism::kNaiveAnon: {
      if (sp.u > 8) throw SizeError("exact oracle: naive anonymous requests need u <= 8");
      std::vector<std::uint32_t> queries(sp.u, static_cast<std::uint32_t>(cfg.q_0));
      queries[0] = static_cast<std::uint32_t>(target);
      std::vector<std::size_t> perm(sp.u);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      double count = 1.0;
      for (std::size_t k = 2; k <= sp.u; ++k) count *= static_cast<double>(k);
      do {
        ObservationTrace trace;
        trace.linked = false;
        trace.honest_counts.assign(sp.d, 0);
        trace.batch_size = sp.u;
        for (std::size_t slot = 0; slot < sp.u; ++slot) {
          const Dispatch dispatch{0, FetchIndices{{queries[perm[slot]]}}};
          if (cfg.IsCorrupt(0)) {
            trace.corrupt_views.push_back({slot, 0, dispatch.request});
          } else {
            ++trace.honest_counts[0];
          }
        }
        fn(trace, 1.0 / count);
      } while (std::next_permutation(perm.begin(), perm.end()));
      return;
    }
    case Mechanism::kSparse:
    case Mechanism::kChor:
    case Mechanism::kSubset: {
      // Columns q_i and q_j of the request matrix; the target's column is odd.
      std::size_t rows = sp.d;
      double theta = 0.5;
      if (mech == Mechanism::kSparse) theta = std::get<Sparse>(cfg.mechanism).theta;
      if (mech == Mechanism::kSubset) rows = std::get<Subset>(cfg.mechanism).t;
      CheckEnumerationSize(std::pow(4.0, static_cast<double>(rows)), "column pairs");
      const auto col_i = EnumerateColumns(rows, theta, target == cfg.q_i);
      const auto col_j = EnumerateColumns(rows, theta, target == cfg.q_j);

      // Server assignment: identity for Sparse and Chor's rows; every ordered
      // choice of t distinct servers for Subset-PIR.
      std::vector<std::vector<std::size_t>> assignments;
      if (mech == Mechanism::kSparse) {
        std::vector<std::size_t> identity(sp.d);
        std::iota(identity.begin(), identity.end(), std::size_t{0});
        assignments.push_back(identity);
      } else {
        double count = 1.0;
        for (std::size_t k = 0; k < rows; ++k) count *= static_cast<double>(sp.d - k);
        CheckEnumerationSize(count * std::pow(4.0, static_cast<double>(rows)),
                             "server choices x column pairs");
        std::vector<std::uint32_t> servers(sp.d);
        std::iota(servers.begin(), servers.end(), 0U);
        ForEachCombination(servers, rows, [&](const std::vector<std::uint32_t>& chosen) {
          std::vector<std::size_t> order(chosen.begin(), chosen.end());
          do {
            assignments.push_back(order);
          } while (std::next_permutation(order.begin(), order.end()));
        });
      }
      const double assignment_pr = 1.0 / static_cast<double>(assignments.size());
      for (const auto& servers : assignments) {
        for (const auto& [bits_i, pr_i] : col_i) {
          for (const auto& [bits_j, pr_j] : col_j) {
            std::vector<Dispatch> dispatches;
            for (std::size_t r = 0; r < rows; ++r) {
              BitVector selector(sp.n);
              if (bits_i[r]) selector.Set(cfg.q_i, true);
              if (bits_j[r]) selector.Set(cfg.q_j, true);
              dispatches.push_back({servers[r], XorSelect{std::move(selector)}});
            }
            fn(fetch_trace(dispatches), assignment_pr * pr_i * pr_j);
          }
        }
      }
      return;
    }
    default:
      throw SizeError("exact oracle: no enumeration for " +
                      std::string(mechanism_name(mech)) + "; use monte_carlo_estimate");
  }
}

}  // namespace internal

// Exact likelihood ratios by enumerating all mechanism randomness for both
// arms. Classes possible under only one candidate make the ratio infinite and
// are reported as the zero-support witness.
inline LikelihoodReport exact_oracle(const GameConfig& cfg,
                                     ObservationMode mode = ObservationMode::kReduced) {
  cfg.Validate();
  LikelihoodReport report;
  report.exact = true;
  for (std::size_t arm = 0; arm < 2; ++arm) {
    GameConfig arm_cfg = cfg;
    arm_cfg.target_choice = arm;
    internal::EnumerateArm(arm_cfg, arm_cfg.target_query(),
                           [&](const ObservationTrace& trace, double pr) {
                             const Statistic key = mode == ObservationMode::kFull
                                                       ? full_observation_key(trace, arm_cfg)
                                                       : observation_statistic(trace, arm_cfg);
                             ClassTally& tally = report.classes[key];
                             (arm == 0 ? tally.given_qi : tally.given_qj) += pr;
                           });
  }
  double best = 1.0;
  double mass_i = 0.0;
  double mass_j = 0.0;
  for (const auto& [stat, tally] : report.classes) {
    const double a = tally.given_qi;
    const double b = tally.given_qj;
    if (a > 0.0 && b > 0.0) {
      const double ratio = std::max(a / b, b / a);
      if (ratio > best) {
        best = ratio;
        report.argmax = stat;
      }
    } else if (a > 0.0 || b > 0.0) {
      mass_i += a;
      mass_j += b;
      if (!report.zero_support_witness) report.zero_support_witness = stat;
    }
  }
  report.one_sided_mass = std::max(mass_i, mass_j);
  report.two_sided_max_ratio = best;
  if (report.zero_support_witness) {
    report.max_ratio = kInfinity;
    report.epsilon_empirical = report.max_ratio;
  } else {
    report.max_ratio = best;
    report.epsilon_empirical = std::log(best);
  }
  report.ci_low = report.ci_high = report.epsilon_empirical;
  return report;
}

struct EventFrequency {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  double rate() const { return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0; }
};

// Frequency with which every server a Subset-PIR (or Chor) target contacts
// is corrupt, so the query is reconstructible by the adversary.
inline EventFrequency subset_delta_estimate(const GameConfig& cfg, std::uint64_t trials,
                                            RngStream& rng) {
  cfg.Validate();
  const Mechanism mech = mechanism_of(cfg.mechanism);
  if (mech != Mechanism::kSubset && mech != Mechanism::kChor) {
    throw ParameterError("subset_delta_estimate: needs subset or chor");
  }
  if (trials < 1) throw ParameterError("subset_delta_estimate: trials must be >= 1");
  EventFrequency freq;
  freq.trials = trials;
  for (std::uint64_t k = 0; k < trials; ++k) {
    const QueryPlan plan = make_plan(cfg.mechanism, cfg.target_query(), cfg.params, rng);
    bool all_corrupt = true;
    for (const Dispatch& dispatch : plan.dispatches) {
      if (!cfg.IsCorrupt(dispatch.server)) {
        all_corrupt = false;
        break;
      }
    }
    if (all_corrupt) ++freq.hits;
  }
  return freq;
}

struct NaiveCompositionFrequencies {
  EventFrequency all_requested_qi;   // target ran Q_i, Q_i appears in all u bundles
  EventFrequency none_requested_qi;  // target ran Q_j, Q_i appears in no bundle
};

// Naive dummy requests from u users through the anonymity system, all other
// users running q_0 (which must differ from q_i and q_j). The single server
// is corrupt and sees u unlinkable bundles.
inline NaiveCompositionFrequencies naive_composition_frequencies(std::size_t n, std::size_t p,
                                                                 std::size_t u, std::size_t q_i,
                                                                 std::size_t q_j, std::size_t q_0,
                                                                 std::uint64_t trials,
                                                                 RngStream& rng) {
  if (u < 1 || trials < 1) throw ParameterError("naive_composition_frequencies: u, trials >= 1");
  const SystemParams params{.n = n, .d = 1, .d_a = 1, .u = u};
  params.Validate();
  const MechanismParams mech = NaiveDummy{p};
  GameConfig cfg = GameConfig::Make(mech, params, q_i, q_j, q_0);
  cfg.Validate();

  NaiveCompositionFrequencies out;
  for (std::size_t arm = 0; arm < 2; ++arm) {
    RngStream arm_rng = rng.Derive(arm);
    EventFrequency& freq = arm == 0 ? out.all_requested_qi : out.none_requested_qi;
    freq.trials = trials;
    for (std::uint64_t k = 0; k < trials; ++k) {
      AnonBatch<FetchIndices> batch;
      for (std::size_t user = 0; user < u; ++user) {
        const std::size_t query = user == 0 ? (arm == 0 ? q_i : q_j) : q_0;
        const QueryPlan plan = gen_naive_dummy(query, p, n, arm_rng);
        batch.Submit(user, 0, std::get<FetchIndices>(plan.dispatches.front().request));
      }
      std::size_t containing = 0;
      for (const auto& delivery : batch.MixAndDeliver(arm_rng)) {
        const auto& idx = delivery.payload.indices;
        if (std::find(idx.begin(), idx.end(), q_i) != idx.end()) ++containing;
      }
      if (arm == 0 && containing == u) ++freq.hits;
      if (arm == 1 && containing == 0) ++freq.hits;
    }
  }
  return out;
}

}  // namespace epir

#endif  // EPIR_GAME_HPP_
