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

#ifndef APRAD_MODEL_HPP_
#define APRAD_MODEL_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "aprad/dist.hpp"
#include "aprad/vocab.hpp"

namespace aprad {

// Anything that can answer "what is the next-token distribution after this
// prefix". Base models, exclusion tries and path snapshots all implement it.
class ConditionalSource {
 public:
  virtual ~ConditionalSource() = default;
  virtual Dist conditional(TokenSpan prefix) const = 0;
};

// Autoregressive model. conditional() must be deterministic in the prefix.
class Model : public ConditionalSource {
 public:
  virtual const Vocab& vocab() const = 0;
  virtual std::optional<TokenId> eos() const { return std::nullopt; }
};

class UniformModel final : public Model {
 public:
  explicit UniformModel(Vocab vocab);

  const Vocab& vocab() const override { return vocab_; }
  Dist conditional(TokenSpan prefix) const override;

 private:
  Vocab vocab_;
  Dist dist_;
};

// Explicit conditional table keyed by exact prefix, with a fallback row.
class TableModel final : public Model {
 public:
  TableModel(Vocab vocab, std::map<Sequence, Dist> table, Dist fallback,
             std::optional<TokenId> eos = std::nullopt);

  const Vocab& vocab() const override { return vocab_; }
  std::optional<TokenId> eos() const override { return eos_; }
  Dist conditional(TokenSpan prefix) const override;

  const std::map<Sequence, Dist>& table() const { return table_; }
  const Dist& fallback() const { return fallback_; }

 private:
  Vocab vocab_;
  std::map<Sequence, Dist> table_;
  Dist fallback_;
  std::optional<TokenId> eos_;
};

// Sampling transforms applied to every conditional, in the order
// temperature, top-k, top-p. Unset fields are skipped.
struct SamplingTransforms {
  std::optional<double> temperature;
  std::optional<std::size_t> top_k;
  std::optional<double> top_p;

  bool empty() const { return !temperature && !top_k && !top_p; }
  Dist apply(Dist dist) const;
  bool operator==(const SamplingTransforms&) const = default;
};

class TransformedModel final : public Model {
 public:
  TransformedModel(std::shared_ptr<const Model> inner,
                   SamplingTransforms transforms);

  const Vocab& vocab() const override { return inner_->vocab(); }
  std::optional<TokenId> eos() const override { return inner_->eos(); }
  Dist conditional(TokenSpan prefix) const override;

 private:
  std::shared_ptr<const Model> inner_;
  SamplingTransforms transforms_;
};

// Product of conditionals for the tokens after the first prompt_len.
double sequence_probability(const ConditionalSource& model, TokenSpan seq,
                            std::size_t prompt_len);

// What a CountingModel remembers between queries.
enum class CachePolicy {
  // Only conditionals along the most recently evaluated prefix are kept, the
  // way a transformer KV cache holds one decoding path. Moving to a prefix
  // that branches off the path drops everything past the branch point.
  kCurrentPath,
  // Every evaluated prefix is memoized until the episode ends.
  kEpisode,
};

struct GenerationLimits {
  std::size_t max_tokens = 1;
  std::size_t invocation_budget = 2000;
  bool stop_on_eos = true;
  CachePolicy cache = CachePolicy::kCurrentPath;
};

// Per-episode instrumentation.
struct EpisodeStats {
  // Distinct base-model evaluations (cache misses).
  std::size_t invocations = 0;
  // Tokens in the returned sequence after the prompt.
  std::size_t output_tokens = 0;
  // Error recoveries that discarded at least one token besides the error
  // token itself.
  std::size_t backtracks = 0;
  std::size_t errors_discovered = 0;
  // Full generations attempted; only rejection sampling uses more than one.
  std::size_t attempts = 0;
  bool budget_exhausted = false;
  // Length of the sequence (prompt included) at the first oracle hit.
  std::optional<std::size_t> first_error_length;

  double generation_ratio() const {
    return output_tokens == 0 ? 0.0
                              : static_cast<double>(invocations) /
                                    static_cast<double>(output_tokens);
  }
};

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("model invocation budget exhausted") {}
};

// Caching wrapper that counts evaluations of the inner model.
//
// Outputs are bit-identical to the inner model. Each cache miss is one
// invocation; a miss when `invocations() == budget()` throws BudgetExhausted
// instead of evaluating. One instance belongs to one episode and is not
// thread-safe. The inner model must outlive the wrapper.
class CountingModel final : public Model {
 public:
  static constexpr std::size_t kUnlimited = static_cast<std::size_t>(-1);

  explicit CountingModel(const Model& inner, std::size_t budget = kUnlimited,
                         CachePolicy policy = CachePolicy::kCurrentPath);

  const Vocab& vocab() const override { return inner_.vocab(); }
  std::optional<TokenId> eos() const override { return inner_.eos(); }
  Dist conditional(TokenSpan prefix) const override;

  std::size_t invocations() const { return invocations_; }
  std::size_t budget() const { return budget_; }
  CachePolicy policy() const { return policy_; }
  bool cached(TokenSpan prefix) const;

  // Drops cached results but keeps the invocation count.
  void clear_cache();
  // Starts a new episode: empty cache, zero invocations.
  void reset_episode() {
    clear_cache();
    invocations_ = 0;
  }

 private:
  const Dist* lookup(TokenSpan prefix) const;

  const Model& inner_;
  std::size_t budget_;
  CachePolicy policy_;
  // kCurrentPath: path_dists_[n] holds conditional(path_[..n]) when known.
  mutable Sequence path_;
  mutable std::vector<std::optional<Dist>> path_dists_;
  // kEpisode.
  mutable std::unordered_map<Sequence, Dist, SequenceHash> memo_;
  mutable std::size_t invocations_ = 0;
};

}  // namespace aprad

#endif  // APRAD_MODEL_HPP_
