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

// Client-side query generation and answer reconstruction for the nine
// retrieval mechanisms: naive dummies, naive anonymous requests, direct
// dummy requests (plain, bundled and separated through an anonymity
// channel), Sparse-PIR (plain and anonymous), Subset-PIR and Chor's scheme.

#ifndef EPIR_MECHANISMS_HPP_
#define EPIR_MECHANISMS_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "epir/bit_vector.hpp"
#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/messages.hpp"
#include "epir/rng.hpp"

namespace epir {

enum class Mechanism {
  kNaiveDummy,
  kNaiveAnon,
  kDirect,
  kBundledAnon,
  kSeparatedAnon,
  kSparse,
  kAnonSparse,
  kSubset,
  kChor,
};

inline constexpr Mechanism kAllMechanisms[] = {
    Mechanism::kNaiveDummy, Mechanism::kNaiveAnon,     Mechanism::kDirect,
    Mechanism::kBundledAnon, Mechanism::kSeparatedAnon, Mechanism::kSparse,
    Mechanism::kAnonSparse, Mechanism::kSubset,        Mechanism::kChor,
};

inline std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kNaiveDummy: return "naive-dummy";
    case Mechanism::kNaiveAnon: return "naive-anon";
    case Mechanism::kDirect: return "direct";
    case Mechanism::kBundledAnon: return "bundled-anon";
    case Mechanism::kSeparatedAnon: return "separated-anon";
    case Mechanism::kSparse: return "sparse";
    case Mechanism::kAnonSparse: return "anon-sparse";
    case Mechanism::kSubset: return "subset";
    case Mechanism::kChor: return "chor";
  }
  return "unknown";
}

inline Mechanism parse_mechanism(std::string_view name) {
  for (Mechanism m : kAllMechanisms) {
    if (mechanism_name(m) == name) return m;
  }
  throw ParameterError("unknown mechanism '" + std::string(name) + "'");
}

// How the request set of a dummy mechanism is split across servers. Shuffled
// pops the set in uniformly random order so the target's server is uniform;
// ascending pops smallest-first and leaks the target's rank within the set.
enum class PopOrder { kShuffled, kAscending };

// Sparse-PIR column sampling strategy; both produce the same distribution.
enum class ColumnSampler { kRejection, kWeightFirst };

struct NaiveDummy {
  std::size_t p = 2;
};
struct NaiveAnon {};
struct Direct {
  std::size_t p = 2;
  PopOrder pop_order = PopOrder::kShuffled;
};
struct BundledAnon {
  std::size_t p = 2;
  PopOrder pop_order = PopOrder::kShuffled;
};
struct SeparatedAnon {
  std::size_t p = 2;
};
struct Sparse {
  double theta = 0.5;
  ColumnSampler sampler = ColumnSampler::kRejection;
};
struct AnonSparse {
  double theta = 0.5;
  ColumnSampler sampler = ColumnSampler::kRejection;
};
struct Subset {
  std::size_t t = 2;
};
struct Chor {};

using MechanismParams = std::variant<NaiveDummy, NaiveAnon, Direct, BundledAnon,
                                     SeparatedAnon, Sparse, AnonSparse, Subset, Chor>;

inline Mechanism mechanism_of(const MechanismParams& params) {
  return std::visit(
      [](const auto& m) -> Mechanism {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NaiveDummy>) return Mechanism::kNaiveDummy;
        if constexpr (std::is_same_v<T, NaiveAnon>) return Mechanism::kNaiveAnon;
        if constexpr (std::is_same_v<T, Direct>) return Mechanism::kDirect;
        if constexpr (std::is_same_v<T, BundledAnon>) return Mechanism::kBundledAnon;
        if constexpr (std::is_same_v<T, SeparatedAnon>) return Mechanism::kSeparatedAnon;
        if constexpr (std::is_same_v<T, Sparse>) return Mechanism::kSparse;
        if constexpr (std::is_same_v<T, AnonSparse>) return Mechanism::kAnonSparse;
        if constexpr (std::is_same_v<T, Subset>) return Mechanism::kSubset;
        if constexpr (std::is_same_v<T, Chor>) return Mechanism::kChor;
      },
      params);
}

// True for mechanisms whose requests travel through the anonymity channel.
inline bool uses_anonymity(Mechanism m) {
  return m == Mechanism::kNaiveAnon || m == Mechanism::kBundledAnon ||
         m == Mechanism::kSeparatedAnon || m == Mechanism::kAnonSparse;
}

enum class Reconstruction { kPickIndex, kXorAll };

// How the plan's messages reach the servers: directly, as one anonymous
// bundle per user, or as one anonymous message per request.
enum class Transport { kDirect, kAnonBundle, kAnonSeparated };

struct Dispatch {
  std::size_t server = 0;
  ServerRequest request;
};

struct QueryPlan {
  Mechanism mechanism = Mechanism::kChor;
  std::vector<Dispatch> dispatches;
  std::size_t target_index = 0;
  Reconstruction reconstruction = Reconstruction::kXorAll;
  Transport transport = Transport::kDirect;
};

namespace internal {

inline void CheckTarget(std::size_t q, std::size_t n) {
  if (q >= n) {
    throw ParameterError("query index " + std::to_string(q) + " out of range [0, " +
                         std::to_string(n) + ")");
  }
}

inline void CheckPartitionedP(std::size_t p, const SystemParams& params) {
  if (p <= 1) throw ParameterError("p must be > 1");
  if (p % params.d != 0) {
    throw ParameterError("p = " + std::to_string(p) + " is not a multiple of d = " +
                         std::to_string(params.d));
  }
  if (p > params.n) {
    throw ParameterError("p = " + std::to_string(p) + " exceeds n = " +
                         std::to_string(params.n));
  }
}

inline void CheckTheta(double theta) {
  if (!(theta > 0.0 && theta <= 0.5)) {
    throw ParameterError("theta must lie in (0, 1/2]");
  }
}

// {q} plus p - 1 distinct uniform dummies, drawn by redrawing on collision.
// Returned in insertion order.
inline std::vector<std::uint32_t> DrawRequestSet(std::size_t q, std::size_t p,
                                                 std::size_t n, RngStream& rng) {
  std::vector<std::uint32_t> req;
  req.reserve(p);
  req.push_back(static_cast<std::uint32_t>(q));
  if (2 * p > n) {
    std::vector<bool> seen(n, false);
    seen[q] = true;
    while (req.size() < p) {
      const auto candidate = rng.UniformIndex(n);
      if (!seen[candidate]) {
        seen[candidate] = true;
        req.push_back(static_cast<std::uint32_t>(candidate));
      }
    }
  } else {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2 * p);
    seen.insert(q);
    while (req.size() < p) {
      const auto candidate = rng.UniformIndex(n);
      if (seen.insert(candidate).second) {
        req.push_back(static_cast<std::uint32_t>(candidate));
      }
    }
  }
  return req;
}

template <typename T>
void Shuffle(std::vector<T>& items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.UniformIndex(i)]);
  }
}

// Pops the request set p/d at a time into servers 0..d-1. Each server's list
// is sent sorted.
inline std::vector<Dispatch> PartitionRequests(std::vector<std::uint32_t> req,
                                               std::size_t d, PopOrder order,
                                               RngStream& rng) {
  if (order == PopOrder::kShuffled) {
    Shuffle(req, rng);
  } else {
    std::sort(req.begin(), req.end());
  }
  const std::size_t per_server = req.size() / d;
  std::vector<Dispatch> out;
  out.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<std::uint32_t> chunk(req.begin() + static_cast<std::ptrdiff_t>(i * per_server),
                                     req.begin() + static_cast<std::ptrdiff_t>((i + 1) * per_server));
    std::sort(chunk.begin(), chunk.end());
    out.push_back({i, FetchIndices{std::move(chunk)}});
  }
  return out;
}

inline std::uint64_t BernoulliThreshold(double theta) {
  // theta <= 1/2, so theta * 2^64 <= 2^63 fits.
  return static_cast<std::uint64_t>(std::ldexp(theta, 64));
}

// Distribution of a column's Hamming weight conditioned on its parity, as a
// cumulative table over the admissible weights.
struct WeightTable {
  std::vector<std::size_t> weights;
  std::vector<double> cumulative;
};

inline WeightTable ConditionedWeights(std::size_t d, double theta, bool odd) {
  WeightTable table;
  double total = 0.0;
  double binom = 1.0;  // C(d, w)
  for (std::size_t w = 0; w <= d; ++w) {
    if (w > 0) binom = binom * static_cast<double>(d - w + 1) / static_cast<double>(w);
    if ((w % 2 == 1) == odd) {
      total += binom * std::pow(theta, static_cast<double>(w)) *
               std::pow(1.0 - theta, static_cast<double>(d - w));
      table.weights.push_back(w);
      table.cumulative.push_back(total);
    }
  }
  for (double& c : table.cumulative) c /= total;
  table.cumulative.back() = 1.0;
  return table;
}

inline constexpr std::size_t kRejectionCap = 1'000'000;

// Writes one column of d Bernoulli(theta) bits with the requested parity into
// `column` (d bits, word-packed).
class ColumnDrawer {
 public:
  ColumnDrawer(std::size_t d, double theta, ColumnSampler sampler)
      : d_(d), sampler_(sampler), threshold_(BernoulliThreshold(theta)) {
    if (sampler_ == ColumnSampler::kWeightFirst) {
      even_ = ConditionedWeights(d, theta, false);
      odd_ = ConditionedWeights(d, theta, true);
      positions_.resize(d);
    }
  }

  void Draw(bool odd, std::vector<std::uint64_t>& column, RngStream& rng) {
    if (sampler_ == ColumnSampler::kRejection) {
      DrawRejection(odd, column, rng);
    } else {
      DrawWeightFirst(odd, column, rng);
    }
  }

 private:
  void DrawRejection(bool odd, std::vector<std::uint64_t>& column, RngStream& rng) {
    for (std::size_t attempt = 0; attempt < kRejectionCap; ++attempt) {
      std::fill(column.begin(), column.end(), 0);
      std::size_t weight = 0;
      for (std::size_t r = 0; r < d_; ++r) {
        if (rng() < threshold_) {
          column[r / 64] |= std::uint64_t{1} << (r % 64);
          ++weight;
        }
      }
      if ((weight % 2 == 1) == odd) return;
    }
    throw Error("Sparse column sampling exceeded the rejection cap");
  }

  void DrawWeightFirst(bool odd, std::vector<std::uint64_t>& column, RngStream& rng) {
    const WeightTable& table = odd ? odd_ : even_;
    const double u = rng.Uniform01();
    std::size_t k = 0;
    while (k + 1 < table.cumulative.size() && u >= table.cumulative[k]) ++k;
    const std::size_t weight = table.weights[k];
    std::fill(column.begin(), column.end(), 0);
    for (std::size_t r = 0; r < d_; ++r) positions_[r] = r;
    for (std::size_t i = 0; i < weight; ++i) {
      const std::size_t j = i + rng.UniformIndex(d_ - i);
      std::swap(positions_[i], positions_[j]);
      column[positions_[i] / 64] |= std::uint64_t{1} << (positions_[i] % 64);
    }
  }

  std::size_t d_;
  ColumnSampler sampler_;
  std::uint64_t threshold_;
  WeightTable even_;
  WeightTable odd_;
  std::vector<std::size_t> positions_;
};

inline BitVector RandomBitVector(std::size_t n, RngStream& rng) {
  BitVector v(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng() >> 63) v.Flip(i);
  }
  return v;
}

}  // namespace internal

inline QueryPlan gen_naive_dummy(std::size_t q, std::size_t p, std::size_t n,
                                 RngStream& rng) {
  internal::CheckTarget(q, n);
  if (p <= 1) throw ParameterError("naive dummy: p must be > 1");
  if (p > n) throw ParameterError("naive dummy: cannot draw p > n distinct indices");
  auto req = internal::DrawRequestSet(q, p, n, rng);
  std::sort(req.begin(), req.end());
  QueryPlan plan;
  plan.mechanism = Mechanism::kNaiveDummy;
  plan.dispatches.push_back({0, FetchIndices{std::move(req)}});
  plan.target_index = q;
  plan.reconstruction = Reconstruction::kPickIndex;
  plan.transport = Transport::kDirect;
  return plan;
}

inline QueryPlan gen_naive_anon(std::size_t q, std::size_t n) {
  internal::CheckTarget(q, n);
  QueryPlan plan;
  plan.mechanism = Mechanism::kNaiveAnon;
  plan.dispatches.push_back({0, FetchIndices{{static_cast<std::uint32_t>(q)}}});
  plan.target_index = q;
  plan.reconstruction = Reconstruction::kPickIndex;
  plan.transport = Transport::kAnonBundle;
  return plan;
}

inline QueryPlan gen_direct(std::size_t q, std::size_t p, const SystemParams& params,
                            RngStream& rng, PopOrder order = PopOrder::kShuffled) {
  params.Validate();
  internal::CheckTarget(q, params.n);
  internal::CheckPartitionedP(p, params);
  QueryPlan plan;
  plan.mechanism = Mechanism::kDirect;
  plan.dispatches = internal::PartitionRequests(
      internal::DrawRequestSet(q, p, params.n, rng), params.d, order, rng);
  plan.target_index = q;
  plan.reconstruction = Reconstruction::kPickIndex;
  plan.transport = Transport::kDirect;
  return plan;
}

// Same request set and partition as gen_direct for the same stream; the d
// (server, sub-list) pairs travel as a single anonymous bundle.
inline QueryPlan gen_bundled_anon(std::size_t q, std::size_t p, const SystemParams& params,
                                  RngStream& rng, PopOrder order = PopOrder::kShuffled) {
  QueryPlan plan = gen_direct(q, p, params, rng, order);
  plan.mechanism = Mechanism::kBundledAnon;
  plan.transport = Transport::kAnonBundle;
  return plan;
}

// Each of the p indices is its own anonymous message to an independently
// uniform server; a server may receive several or none.
inline QueryPlan gen_separated_anon(std::size_t q, std::size_t p,
                                    const SystemParams& params, RngStream& rng) {
  params.Validate();
  internal::CheckTarget(q, params.n);
  internal::CheckPartitionedP(p, params);
  auto req = internal::DrawRequestSet(q, p, params.n, rng);
  std::sort(req.begin(), req.end());
  QueryPlan plan;
  plan.mechanism = Mechanism::kSeparatedAnon;
  for (std::uint32_t index : req) {
    plan.dispatches.push_back({rng.UniformIndex(params.d), FetchIndices{{index}}});
  }
  plan.target_index = q;
  plan.reconstruction = Reconstruction::kPickIndex;
  plan.transport = Transport::kAnonSeparated;
  return plan;
}

// Builds the d x n request matrix column by column: column q has odd Hamming
// weight, every other column even, each column being d Bernoulli(theta)
// trials conditioned on that parity. Row i is server i's selector.
inline QueryPlan gen_sparse(std::size_t q, double theta, const SystemParams& params,
                            RngStream& rng,
                            ColumnSampler sampler = ColumnSampler::kRejection) {
  params.Validate();
  internal::CheckTarget(q, params.n);
  internal::CheckTheta(theta);
  if (params.d < 2) throw ParameterError("Sparse-PIR needs d >= 2");
  const std::size_t n = params.n;
  const std::size_t d = params.d;
  std::vector<BitVector> rows(d, BitVector(n));
  std::vector<std::uint64_t> column((d + 63) / 64);
  internal::ColumnDrawer drawer(d, theta, sampler);
  for (std::size_t col = 0; col < n; ++col) {
    drawer.Draw(col == q, column, rng);
    for (std::size_t w = 0; w < column.size(); ++w) {
      std::uint64_t bits = column[w];
      while (bits != 0) {
        const std::size_t r = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        rows[r].Flip(col);
        bits &= bits - 1;
      }
    }
  }
  QueryPlan plan;
  plan.mechanism = Mechanism::kSparse;
  for (std::size_t i = 0; i < d; ++i) {
    plan.dispatches.push_back({i, XorSelect{std::move(rows[i])}});
  }
  plan.target_index = q;
  plan.reconstruction = Reconstruction::kXorAll;
  plan.transport = Transport::kDirect;
  return plan;
}

// Sparse-PIR whose d rows travel as one linkable anonymous bundle.
inline QueryPlan gen_anon_sparse(std::size_t q, double theta, const SystemParams& params,
                                 RngStream& rng,
                                 ColumnSampler sampler = ColumnSampler::kRejection) {
  QueryPlan plan = gen_sparse(q, theta, params, rng, sampler);
  plan.mechanism = Mechanism::kAnonSparse;
  plan.transport = Transport::kAnonBundle;
  return plan;
}

// Chor's scheme on t distinct uniformly chosen servers: t - 1 uniform vectors
// and a final one fixing the XOR to e_q.
inline QueryPlan gen_subset(std::size_t q, std::size_t t, const SystemParams& params,
                            RngStream& rng) {
  params.Validate();
  internal::CheckTarget(q, params.n);
  if (t < 2 || t > params.d) {
    throw ParameterError("Subset-PIR needs 2 <= t <= d (t = " + std::to_string(t) +
                         ", d = " + std::to_string(params.d) + ")");
  }
  std::vector<BitVector> vectors;
  vectors.reserve(t);
  BitVector last = BitVector::Unit(params.n, q);
  for (std::size_t j = 0; j + 1 < t; ++j) {
    vectors.push_back(internal::RandomBitVector(params.n, rng));
    last ^= vectors.back();
  }
  vectors.push_back(std::move(last));

  std::vector<std::size_t> servers;
  std::vector<bool> chosen(params.d, false);
  while (servers.size() < t) {
    const auto server = rng.UniformIndex(params.d);
    if (!chosen[server]) {
      chosen[server] = true;
      servers.push_back(server);
    }
  }
  QueryPlan plan;
  plan.mechanism = Mechanism::kSubset;
  for (std::size_t j = 0; j < t; ++j) {
    plan.dispatches.push_back({servers[j], XorSelect{std::move(vectors[j])}});
  }
  plan.target_index = q;
  plan.reconstruction = Reconstruction::kXorAll;
  plan.transport = Transport::kDirect;
  return plan;
}

inline QueryPlan gen_chor(std::size_t q, const SystemParams& params, RngStream& rng) {
  if (params.d < 2) throw ParameterError("Chor's scheme needs d >= 2");
  QueryPlan plan = gen_subset(q, params.d, params, rng);
  plan.mechanism = Mechanism::kChor;
  return plan;
}

// Checks mechanism preconditions against the system without generating.
inline void validate_mechanism(const MechanismParams& mech, const SystemParams& params) {
  params.Validate();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NaiveDummy>) {
          if (m.p <= 1 || m.p > params.n) throw ParameterError("naive dummy needs 1 < p <= n");
        } else if constexpr (std::is_same_v<T, Direct> || std::is_same_v<T, BundledAnon> ||
                             std::is_same_v<T, SeparatedAnon>) {
          internal::CheckPartitionedP(m.p, params);
        } else if constexpr (std::is_same_v<T, Sparse> || std::is_same_v<T, AnonSparse>) {
          internal::CheckTheta(m.theta);
          if (params.d < 2) throw ParameterError("Sparse-PIR needs d >= 2");
        } else if constexpr (std::is_same_v<T, Subset>) {
          if (m.t < 2 || m.t > params.d) throw ParameterError("Subset-PIR needs 2 <= t <= d");
        } else if constexpr (std::is_same_v<T, Chor>) {
          if (params.d < 2) throw ParameterError("Chor's scheme needs d >= 2");
        }
      },
      mech);
}

inline QueryPlan make_plan(const MechanismParams& mech, std::size_t q,
                           const SystemParams& params, RngStream& rng) {
  return std::visit(
      [&](const auto& m) -> QueryPlan {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NaiveDummy>) {
          return gen_naive_dummy(q, m.p, params.n, rng);
        } else if constexpr (std::is_same_v<T, NaiveAnon>) {
          return gen_naive_anon(q, params.n);
        } else if constexpr (std::is_same_v<T, Direct>) {
          return gen_direct(q, m.p, params, rng, m.pop_order);
        } else if constexpr (std::is_same_v<T, BundledAnon>) {
          return gen_bundled_anon(q, m.p, params, rng, m.pop_order);
        } else if constexpr (std::is_same_v<T, SeparatedAnon>) {
          return gen_separated_anon(q, m.p, params, rng);
        } else if constexpr (std::is_same_v<T, Sparse>) {
          return gen_sparse(q, m.theta, params, rng, m.sampler);
        } else if constexpr (std::is_same_v<T, AnonSparse>) {
          return gen_anon_sparse(q, m.theta, params, rng, m.sampler);
        } else if constexpr (std::is_same_v<T, Subset>) {
          return gen_subset(q, m.t, params, rng);
        } else {
          return gen_chor(q, params, rng);
        }
      },
      mech);
}

// Recovers record Q from one response per dispatch, in dispatch order.
inline Record reconstruct(const QueryPlan& plan, const std::vector<ServerResponse>& responses) {
  if (responses.size() != plan.dispatches.size()) {
    throw ReconstructionError("expected " + std::to_string(plan.dispatches.size()) +
                              " responses, got " + std::to_string(responses.size()));
  }
  if (plan.reconstruction == Reconstruction::kPickIndex) {
    std::optional<Record> found;
    for (std::size_t k = 0; k < responses.size(); ++k) {
      const auto* records = std::get_if<RecordsResponse>(&responses[k]);
      const auto* request = std::get_if<FetchIndices>(&plan.dispatches[k].request);
      if (records == nullptr || request == nullptr ||
          records->entries.size() != request->indices.size()) {
        throw ReconstructionError("response " + std::to_string(k) +
                                  " does not match its fetch request");
      }
      for (std::size_t e = 0; e < records->entries.size(); ++e) {
        if (records->entries[e].index != request->indices[e]) {
          throw ReconstructionError("response " + std::to_string(k) +
                                    " echoes the wrong index");
        }
        if (records->entries[e].index == plan.target_index) {
          found = records->entries[e].record;
        }
      }
    }
    if (!found) throw ReconstructionError("no response carries the target record");
    return *found;
  }

  std::optional<Record> acc;
  for (std::size_t k = 0; k < responses.size(); ++k) {
    const auto* block = std::get_if<XorBlockResponse>(&responses[k]);
    if (block == nullptr || !std::holds_alternative<XorSelect>(plan.dispatches[k].request)) {
      throw ReconstructionError("response " + std::to_string(k) +
                                " is not an XOR block for an XOR request");
    }
    if (!acc) {
      acc = block->block;
    } else {
      if (acc->size() != block->block.size()) {
        throw ReconstructionError("XOR blocks have mismatched sizes");
      }
      acc->XorWith(block->block.bytes());
    }
  }
  if (!acc) throw ReconstructionError("no responses to combine");
  return *acc;
}

}  // namespace epir

#endif  // EPIR_MECHANISMS_HPP_
