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

// Exact composition of a single-user mechanism with the ideal anonymity
// system. With u users, the adversary sees u unlinkable observations and
// must average over every matching of observations to users:
//
//   Pr(o_1..o_u | target runs q) = 1/u! * sum_sigma prod_k L(o_sigma(k) | query_k)
//
// where user 0 runs q and everyone else runs the crowd query.

#ifndef EPIR_COMPOSITION_HPP_
#define EPIR_COMPOSITION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "epir/error.hpp"

namespace epir {

enum QueryRole : std::size_t { kTargetQuery = 0, kAlternativeQuery = 1, kCrowdQuery = 2 };

// rows[o][role]: probability (or any positive likelihood) of a single user
// producing observation o when issuing the query of that role.
struct LikelihoodTable {
  std::vector<std::array<double, 3>> rows;
};

inline constexpr std::size_t kMaxComposedUsers = 10;

inline double composed_likelihood(const LikelihoodTable& table,
                                  const std::vector<std::size_t>& observations,
                                  QueryRole target_role) {
  const std::size_t u = observations.size();
  if (u < 1 || u > kMaxComposedUsers) {
    throw SizeError("composed_likelihood: need 1 <= u <= 10");
  }
  for (std::size_t o : observations) {
    if (o >= table.rows.size()) throw ParameterError("composed_likelihood: unknown observation");
  }
  std::vector<std::size_t> perm(u);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double sum = 0.0;
  double count = 0.0;
  do {
    double term = table.rows[observations[perm[0]]][target_role];
    for (std::size_t k = 1; k < u; ++k) term *= table.rows[observations[perm[k]]][kCrowdQuery];
    sum += term;
    count += 1.0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / count;
}

// Likelihood ratio of the target having run its actual query versus the
// alternative, given the unlinkable observations.
inline double composed_ratio(const LikelihoodTable& table,
                             const std::vector<std::size_t>& observations) {
  return composed_likelihood(table, observations, kTargetQuery) /
         composed_likelihood(table, observations, kAlternativeQuery);
}

// Two-point mechanism for the worst case of the permutation sum: observation
// 0 ("A") is the target's, observation 1 ("Z") the crowd's. Every ratio of
// likelihoods between two queries on one observation is at most e^eps1:
//   L(A|target) = mu, L(A|crowd) = nu, L(A|alt) = nu^2 / mu
//   L(Z|crowd)  = mu, L(Z|target) = L(Z|alt) = nu
// with mu = e^eps1 nu. The target-vs-alternative ratio on A reaches
// e^{2 eps1}, the squared term of the composition bound, and the fold
// evaluates to (e^{2 eps1} + u - 1) / u exactly.
inline LikelihoodTable worst_case_two_point_table(double eps1) {
  const double nu = 1.0;
  const double mu = std::exp(eps1);
  return {{{mu, nu * nu / mu, nu}, {nu, nu, mu}}};
}

// Same table with a constant nu for every non-matching pair, as written
// literally in the constant-mu/nu simplification. Its fold gives
// (e^{2 eps1} + u - 1) / (e^{eps1} + u - 1), below the bound.
inline LikelihoodTable constant_two_point_table(double eps1) {
  const double nu = 1.0;
  const double mu = std::exp(eps1);
  return {{{mu, nu, nu}, {nu, nu, mu}}};
}

// Observations [A, Z, ..., Z] for u users.
inline std::vector<std::size_t> two_point_observations(std::size_t u) {
  std::vector<std::size_t> obs(u, 1);
  if (u > 0) obs[0] = 0;
  return obs;
}

}  // namespace epir

#endif  // EPIR_COMPOSITION_HPP_
