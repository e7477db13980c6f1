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

#ifndef APRAD_DIST_HPP_
#define APRAD_DIST_HPP_

#include <cstddef>
#include <stdexcept>

#include <Eigen/Core>

#include "aprad/rng.hpp"
#include "aprad/vocab.hpp"

namespace aprad {

inline constexpr double kDistTolerance = 1e-9;

class AllZeroError : public std::domain_error {
 public:
  AllZeroError() : std::domain_error("normalize: every weight is zero") {}
};

// A conditional distribution over the vocabulary for one step.
//
// Entries are non-negative and sum to one within kDistTolerance; the
// constructor enforces this. The storage is an Eigen column vector so the
// transforms below can be written as coefficient-wise expressions.
class Dist {
 public:
  explicit Dist(Eigen::VectorXd probs);

  static Dist uniform(std::size_t n);
  static Dist point_mass(std::size_t n, TokenId token);

  std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }
  double operator[](TokenId t) const { return probs_[static_cast<Eigen::Index>(t)]; }
  const Eigen::VectorXd& probs() const { return probs_; }

  bool operator==(const Dist& other) const {
    return probs_.size() == other.probs_.size() && probs_ == other.probs_;
  }

 private:
  Eigen::VectorXd probs_;
};

// True when `probs` satisfies the Dist invariants.
bool is_valid_dist(const Eigen::Ref<const Eigen::VectorXd>& probs);

// Scales non-negative weights to sum to one. Throws AllZeroError when every
// weight is zero and InvariantError on a negative or non-finite weight.
Dist normalize(const Eigen::Ref<const Eigen::VectorXd>& weights);

// Inverse-CDF draw consuming exactly one uniform from `rng`. Zero-probability
// tokens are never returned.
TokenId sample_token(const Dist& dist, Rng& rng);

// Entries proportional to p^(1/t).
Dist apply_temperature(const Dist& dist, double temperature);

// Keeps the k most probable entries; ties go to the lower token id.
Dist apply_top_k(const Dist& dist, std::size_t k);

// Keeps the shortest descending-probability prefix whose mass reaches p.
Dist apply_top_p(const Dist& dist, double p);

// Sum over tokens of |a - b| / 2.
double total_variation(const Dist& a, const Dist& b);

}  // namespace aprad

#endif  // APRAD_DIST_HPP_
