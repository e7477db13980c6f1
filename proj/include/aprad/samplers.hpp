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

#ifndef APRAD_SAMPLERS_HPP_
#define APRAD_SAMPLERS_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "aprad/dist.hpp"
#include "aprad/error_oracle.hpp"
#include "aprad/exclusion.hpp"
#include "aprad/model.hpp"
#include "aprad/rng.hpp"

namespace aprad {

struct GenerationOutcome {
  Sequence sequence;
  EpisodeStats stats;
  // False when the invocation budget ran out (or no error-free continuation
  // exists); `sequence` is then the last error-free sequence reached.
  bool completed = false;
};

// ---------------------------------------------------------------------------
// Speculative sampling
// ---------------------------------------------------------------------------

// min(1, target_p / draft_p); 0 when target_p is 0.
double acceptance_probability(double target_p, double draft_p);

// normalize(max(0, target - draft)). Throws AllZeroError when nothing is left.
Dist residual_distribution(const Dist& target, const Dist& draft);

// Converts tokens seq[n..] that were drawn from `draft` into a sample from
// `target`.
//
// Walks positions i = n .. seq.size()-1 and keeps seq[i] with probability
// acceptance_probability(target(seq[i] | seq[..i]), draft(seq[i] | seq[..i])).
// At the first rejection returns seq[..i] plus one token drawn from the
// residual at that prefix. If every token is kept, returns seq plus one token
// drawn from target(. | seq). The result length is in [n + 1, seq.size() + 1].
//
// When the residual is empty (only possible through rounding) the
// replacement is drawn from the target conditional instead.
Sequence spec_sample(const ConditionalSource& target,
                     const ConditionalSource& draft, std::size_t n,
                     TokenSpan seq, Rng& rng);

// ---------------------------------------------------------------------------
// Backtracking strategies
// ---------------------------------------------------------------------------

// Decides where decoding resumes after `seq` (whose last token completed an
// error) has been added to the trie. `prev` answers the pre-update adjusted
// conditionals along seq, `next` is the updated trie. The returned sequence
// is a prefix of seq, possibly followed by one replacement token, and is never
// shorter than prompt_len.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string_view name() const = 0;
  virtual Sequence on_error(const ConditionalSource& prev,
                            const ExclusionTrie& next, TokenSpan seq,
                            std::size_t prompt_len, Rng& rng) const = 0;
};

// Restart from the prompt (sampling without replacement).
class AsapStrategy final : public Strategy {
 public:
  std::string_view name() const override { return "asap"; }
  Sequence on_error(const ConditionalSource& prev, const ExclusionTrie& next,
                    TokenSpan seq, std::size_t prompt_len,
                    Rng& rng) const override;
};

// Drop the error token; keep dropping while the remaining prefix has no
// continuation left.
class ConstrainedStrategy final : public Strategy {
 public:
  std::string_view name() const override { return "constrained"; }
  Sequence on_error(const ConditionalSource& prev, const ExclusionTrie& next,
                    TokenSpan seq, std::size_t prompt_len,
                    Rng& rng) const override;
};

// Speculative resampling between the pre- and post-update distributions.
class AprADStrategy final : public Strategy {
 public:
  std::string_view name() const override { return "aprad"; }
  Sequence on_error(const ConditionalSource& prev, const ExclusionTrie& next,
                    TokenSpan seq, std::size_t prompt_len,
                    Rng& rng) const override;
};

std::unique_ptr<Strategy> strategy_asap();
std::unique_ptr<Strategy> strategy_constrained();
std::unique_ptr<Strategy> strategy_aprad();

// ---------------------------------------------------------------------------
// Generation loops
// ---------------------------------------------------------------------------

// Plain autoregressive sampling until max_tokens or EOS.
GenerationOutcome unconstrained_generate(const Model& model, TokenSpan prompt,
                                         const GenerationLimits& limits,
                                         Rng& rng);

// Regenerates from scratch until the output is not an error. Each attempt
// starts with an empty cache, so its evaluations are all counted.
GenerationOutcome rejection_sample(const Model& model, const ErrorOracle& oracle,
                                   TokenSpan prompt,
                                   const GenerationLimits& limits, Rng& rng);

// Samples token by token from the exclusion-adjusted model, checking the
// oracle after every emitted token. On a hit the sequence is added to the
// trie and `strategy` picks the resumption point.
//
// With `shared_trie` set, discovered errors are recorded there and survive
// the call; otherwise a fresh trie is used for the episode.
GenerationOutcome error_free_decoding(const Model& model,
                                      const ErrorOracle& oracle,
                                      TokenSpan prompt, const Strategy& strategy,
                                      const GenerationLimits& limits, Rng& rng,
                                      ExclusionTrie* shared_trie = nullptr);

enum class Method { kUnconstrained, kRejection, kConstrained, kAsap, kAprad };

std::string_view to_string(Method method);
// Accepts the names printed by to_string().
std::optional<Method> parse_method(std::string_view name);

// Dispatches to the loop that implements `method`.
GenerationOutcome run_method(Method method, const Model& model,
                             const ErrorOracle& oracle, TokenSpan prompt,
                             const GenerationLimits& limits, Rng& rng,
                             ExclusionTrie* shared_trie = nullptr);

}  // namespace aprad

#endif  // APRAD_SAMPLERS_HPP_
