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

// Closed-form privacy bounds for every mechanism and the server-side cost
// model. All logarithms are natural. Formulas whose arguments can overflow or
// cancel are evaluated with log1p/expm1.

#ifndef EPIR_ANALYSIS_HPP_
#define EPIR_ANALYSIS_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>

#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/mechanisms.hpp"

namespace epir {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// (epsilon, delta) pair. epsilon = +inf means "not epsilon-private".
struct PrivacyBound {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct CostEstimate {
  double cm_records = 0.0;   // record blocks sent back to the user
  double cp_accesses = 0.0;  // expected record accesses across all servers
  double cp_weighted = 0.0;  // accesses weighted by the unit costs
};

namespace internal {

inline void CheckDummyRange(std::size_t n, std::size_t d, std::size_t d_a, std::size_t p) {
  if (d < 1) throw ParameterError("d must be >= 1");
  if (d_a > d) throw ParameterError("d_a must be <= d");
  if (p <= 1 || p > n) throw ParameterError("need 1 < p <= n");
  if (p % d != 0) throw ParameterError("p must be a multiple of d");
}

// arctanh(x) = 1/2 ln((1 + x)/(1 - x)), written as 1/2 log1p(2x/(1 - x)) so
// that tiny x keeps full relative precision.
inline double Arctanh(double x) {
  if (x >= 1.0 - 1e-15) return kInfinity;
  return 0.5 * std::log1p(2.0 * x / (1.0 - x));
}

}  // namespace internal

// ln(e^{2 eps1} + u - 1) - ln u: the bound for an eps1-private mechanism run
// by u users through an ideal anonymity system.
inline double eps_compose(double eps1, std::size_t u) {
  if (u < 1) throw ParameterError("eps_compose: u must be >= 1");
  if (eps1 < 0.0) throw ParameterError("eps_compose: eps1 must be >= 0");
  if (std::isinf(eps1)) return kInfinity;
  const double users = static_cast<double>(u);
  if (2.0 * eps1 > 700.0) {
    return 2.0 * eps1 + std::log1p((users - 1.0) * std::exp(-2.0 * eps1)) - std::log(users);
  }
  return std::log1p(std::expm1(2.0 * eps1) / users);
}

inline PrivacyBound eps_direct(std::size_t n, std::size_t d, std::size_t d_a, std::size_t p) {
  internal::CheckDummyRange(n, d, d_a, p);
  if (d_a == d) return {kInfinity, 0.0};
  const double ratio = static_cast<double>(d) * static_cast<double>(n - 1) /
                       static_cast<double>(p - 1);
  return {std::log((ratio - static_cast<double>(d_a)) / static_cast<double>(d - d_a)), 0.0};
}

inline PrivacyBound eps_bundled(std::size_t n, std::size_t d, std::size_t d_a, std::size_t p,
                                std::size_t u) {
  if (u < 1) throw ParameterError("eps_bundled: u must be >= 1");
  return {eps_compose(eps_direct(n, d, d_a, p).epsilon, u), 0.0};
}

inline PrivacyBound eps_sparse(double theta, std::size_t d, std::size_t d_a) {
  if (!(theta > 0.0 && theta <= 0.5)) throw ParameterError("eps_sparse: theta in (0, 1/2]");
  if (d_a > d) throw ParameterError("eps_sparse: d_a must be <= d");
  if (d_a == d) return {kInfinity, 0.0};
  const double x = std::pow(1.0 - 2.0 * theta, static_cast<double>(d - d_a));
  return {4.0 * internal::Arctanh(x), 0.0};
}

inline PrivacyBound eps_anon_sparse(double theta, std::size_t d, std::size_t d_a,
                                    std::size_t u) {
  if (u < 1) throw ParameterError("eps_anon_sparse: u must be >= 1");
  const PrivacyBound single = eps_sparse(theta, d, d_a);
  if (std::isinf(single.epsilon)) return {kInfinity, 0.0};
  const double x = std::pow(1.0 - 2.0 * theta, static_cast<double>(d - d_a));
  // ((1 + x)/(1 - x))^4 - 1, without cancellation for tiny x.
  const double excess = std::expm1(4.0 * std::log1p(2.0 * x / (1.0 - x)));
  if (std::isinf(excess)) return {eps_compose(single.epsilon, u), 0.0};
  return {std::log1p(excess / static_cast<double>(u)), 0.0};
}

// Subset-PIR: epsilon = 0, delta = C(d_a, t) / C(d, t) as an iterated
// product.
inline PrivacyBound delta_subset(std::size_t d, std::size_t d_a, std::size_t t) {
  if (t < 1 || t > d) throw ParameterError("delta_subset: need 1 <= t <= d");
  if (d_a > d) throw ParameterError("delta_subset: d_a must be <= d");
  if (t > d_a) return {0.0, 0.0};
  double delta = 1.0;
  for (std::size_t i = 0; i < t; ++i) {
    delta *= static_cast<double>(d_a - i) / static_cast<double>(d - i);
  }
  return {0.0, delta};
}

struct NaiveCompositionDeltas {
  double delta_0 = 0.0;  // bound on "no user requested Q_i"
  double delta_u = 0.0;  // bound on "all u users requested Q_i"
};

// Naive dummy requests through an anonymity channel with u users.
inline NaiveCompositionDeltas naive_composition_deltas(std::size_t n, std::size_t p,
                                                       std::size_t u) {
  if (p <= 1 || p > n) throw ParameterError("naive_composition_deltas: need 1 < p <= n");
  if (u < 1) throw ParameterError("naive_composition_deltas: u must be >= 1");
  const double exponent = static_cast<double>(u - 1);
  const double denom = static_cast<double>(n - 1);
  return {std::pow(static_cast<double>(n - p) / denom, exponent),
          std::pow(static_cast<double>(p - 1) / denom, exponent)};
}

// Analytic bound for a configured mechanism.
inline PrivacyBound analytic_bound(const MechanismParams& mech, const SystemParams& params) {
  return std::visit(
      [&](const auto& m) -> PrivacyBound {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NaiveDummy>) {
          return {m.p == params.n ? 0.0 : kInfinity, 0.0};
        } else if constexpr (std::is_same_v<T, NaiveAnon>) {
          return {kInfinity, 0.0};
        } else if constexpr (std::is_same_v<T, Direct>) {
          return eps_direct(params.n, params.d, params.d_a, m.p);
        } else if constexpr (std::is_same_v<T, BundledAnon> || std::is_same_v<T, SeparatedAnon>) {
          // The bundled bound also covers separated requests, which leak less.
          return eps_bundled(params.n, params.d, params.d_a, m.p, params.u);
        } else if constexpr (std::is_same_v<T, Sparse>) {
          return eps_sparse(m.theta, params.d, params.d_a);
        } else if constexpr (std::is_same_v<T, AnonSparse>) {
          return eps_anon_sparse(m.theta, params.d, params.d_a, params.u);
        } else if constexpr (std::is_same_v<T, Subset>) {
          return delta_subset(params.d, params.d_a, m.t);
        } else {
          return params.d_a < params.d ? PrivacyBound{0.0, 0.0} : PrivacyBound{kInfinity, 0.0};
        }
      },
      mech);
}

// Server-side costs per retrieval. c_acc weighs a record access, c_prc the
// processing (XOR) of an accessed record.
inline CostEstimate cost_model(const MechanismParams& mech, const SystemParams& params,
                               double c_acc, double c_prc) {
  if (c_acc < 0.0 || c_prc < 0.0) throw ParameterError("cost_model: unit costs must be >= 0");
  // Subset-PIR at t = 1 is priced for formula sweeps even though gen_subset
  // refuses it.
  if (const auto* subset = std::get_if<Subset>(&mech)) {
    params.Validate();
    if (subset->t < 1 || subset->t > params.d) throw ParameterError("cost_model: need 1 <= t <= d");
  } else {
    validate_mechanism(mech, params);
  }
  const double n = static_cast<double>(params.n);
  const double d = static_cast<double>(params.d);
  return std::visit(
      [&](const auto& m) -> CostEstimate {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NaiveDummy> || std::is_same_v<T, Direct> ||
                      std::is_same_v<T, BundledAnon> || std::is_same_v<T, SeparatedAnon>) {
          const double p = static_cast<double>(m.p);
          return {p, p, p * c_acc};
        } else if constexpr (std::is_same_v<T, NaiveAnon>) {
          return {1.0, 1.0, c_acc};
        } else if constexpr (std::is_same_v<T, Sparse> || std::is_same_v<T, AnonSparse>) {
          const double accesses = m.theta * d * n;
          return {d, accesses, accesses * (c_acc + c_prc)};
        } else if constexpr (std::is_same_v<T, Subset>) {
          const double t = static_cast<double>(m.t);
          const double accesses = 0.5 * t * n;
          return {t, accesses, accesses * (c_acc + c_prc)};
        } else {
          const double accesses = 0.5 * d * n;
          return {d, accesses, accesses * (c_acc + c_prc)};
        }
      },
      mech);
}

}  // namespace epir

#endif  // EPIR_ANALYSIS_HPP_
