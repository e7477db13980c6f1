// Copyright 2026 The AprAD Authors.
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

#include "aprad/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace aprad {

namespace {

// Token ids sorted by descending probability, ties by ascending id.
std::vector<TokenId> descending_order(const Eigen::VectorXd& p) {
  std::vector<TokenId> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return p[a] > p[b];
  });
  return order;
}

Dist keep_only(const Dist& dist, const std::vector<TokenId>& order,
               std::size_t keep) {
  if (keep >= order.size()) return dist;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dist.size()));
  for (std::size_t i = 0; i < keep; ++i) w[order[i]] = dist[order[i]];
  return normalize(w);
}

}  // namespace

bool is_valid_dist(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  if (probs.size() == 0 || !probs.allFinite()) return false;
  if ((probs.array() < 0.0).any()) return false;
  return std::abs(probs.sum() - 1.0) <= kDistTolerance;
}

Dist::Dist(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (!is_valid_dist(probs_)) {
    throw InvariantError("probabilities must be non-negative and sum to 1");
  }
}

Dist Dist::uniform(std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  return Dist(Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(n)));
}

Dist Dist::point_mass(std::size_t n, TokenId token) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  p[static_cast<Eigen::Index>(token)] = 1.0;
  return Dist(std::move(p));
}

Dist normalize(const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if (weights.size() == 0 || !weights.allFinite() ||
      (weights.array() < 0.0).any()) {
    throw InvariantError("normalize: weights must be finite and non-negative");
  }
  const double total = weights.sum();
  if (total <= 0.0) throw AllZeroError();
  return Dist(weights / total);
}

TokenId sample_token(const Dist& dist, Rng& rng) {
  const Eigen::VectorXd& p = dist.probs();
  const double u = uniform01(rng);
  double cumulative = 0.0;
  TokenId last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_positive = static_cast<TokenId>(i);
    cumulative += p[i];
    if (u < cumulative) return last_positive;
  }
  // Rounding left u above the final cumulative sum.
  return last_positive;
}

Dist apply_temperature(const Dist& dist, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvariantError("temperature must be positive");
  }
  if (temperature == 1.0) return dist;
  return normalize(dist.probs().array().pow(1.0 / temperature).matrix());
}

Dist apply_top_k(const Dist& dist, std::size_t k) {
  if (k == 0) throw InvariantError("top_k needs k >= 1");
  if (k >= dist.size()) return dist;
  return keep_only(dist, descending_order(dist.probs()), k);
}

Dist apply_top_p(const Dist& dist, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvariantError("top_p needs p in (0, 1]");
  if (p == 1.0) return dist;
  const auto order = descending_order(dist.probs());
  double cumulative = 0.0;
  std::size_t keep = 0;
  while (keep < order.size()) {
    cumulative += dist[order[keep]];
    ++keep;
    // Mass that reaches p up to rounding counts as reaching it.
    if (cumulative >= p - 1e-12) break;
  }
  return keep_only(dist, order, keep);
}

double total_variation(const Dist& a, const Dist& b) {
  if (a.size() != b.size()) throw InvariantError("size mismatch");
  return 0.5 * (a.probs() - b.probs()).cwiseAbs().sum();
}

}  // namespace aprad
