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

#include "aprad/samplers.hpp"

#include <algorithm>

namespace aprad {

namespace {

bool finished(const Model& model, const GenerationLimits& limits,
              TokenSpan seq, std::size_t prompt_len) {
  const std::size_t generated = seq.size() - prompt_len;
  if (generated >= limits.max_tokens) return true;
  const auto eos = model.eos();
  return limits.stop_on_eos && eos && generated > 0 && seq.back() == *eos;
}

std::size_t common_prefix(TokenSpan a, TokenSpan b) {
  const auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
  return static_cast<std::size_t>(ia - a.begin());
}

// Length of the shortest prefix of seq (beyond the prompt) in the error set.
std::optional<std::size_t> first_hit(const ErrorOracle& oracle, TokenSpan seq,
                                     std::size_t prompt_len) {
  for (std::size_t len = prompt_len + 1; len <= seq.size(); ++len) {
    if (oracle.contains(seq.first(len))) return len;
  }
  return std::nullopt;
}

}  // namespace

double acceptance_probability(double target_p, double draft_p) {
  if (target_p <= 0.0) return 0.0;
  if (draft_p <= target_p) return 1.0;
  return target_p / draft_p;
}

Dist residual_distribution(const Dist& target, const Dist& draft) {
  return normalize((target.probs() - draft.probs()).cwiseMax(0.0));
}

Sequence spec_sample(const ConditionalSource& target,
                     const ConditionalSource& draft, std::size_t n,
                     TokenSpan seq, Rng& rng) {
  for (std::size_t i = n; i < seq.size(); ++i) {
    const TokenSpan prefix = seq.first(i);
    const Dist t = target.conditional(prefix);
    const Dist d = draft.conditional(prefix);
    const double r = acceptance_probability(t[seq[i]], d[seq[i]]);
    if (r >= 1.0 || uniform01(rng) < r) continue;

    Sequence out(prefix.begin(), prefix.end());
    try {
      out.push_back(sample_token(residual_distribution(t, d), rng));
    } catch (const AllZeroError&) {
      out.push_back(sample_token(t, rng));
    }
    return out;
  }
  Sequence out(seq.begin(), seq.end());
  out.push_back(sample_token(target.conditional(seq), rng));
  return out;
}

Sequence AsapStrategy::on_error(const ConditionalSource& /*prev*/,
                                const ExclusionTrie& /*next*/, TokenSpan seq,
                                std::size_t prompt_len, Rng& /*rng*/) const {
  return Sequence(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(prompt_len));
}

Sequence ConstrainedStrategy::on_error(const ConditionalSource& /*prev*/,
                                       const ExclusionTrie& next, TokenSpan seq,
                                       std::size_t prompt_len,
                                       Rng& /*rng*/) const {
  Sequence out(seq.begin(), seq.end() - 1);
  while (out.size() > prompt_len && next.fully_excluded(out)) out.pop_back();
  return out;
}

Sequence AprADStrategy::on_error(const ConditionalSource& prev,
                                 const ExclusionTrie& next, TokenSpan seq,
                                 std::size_t prompt_len, Rng& rng) const {
  return spec_sample(next, prev, prompt_len, seq, rng);
}

std::unique_ptr<Strategy> strategy_asap() { return std::make_unique<AsapStrategy>(); }
std::unique_ptr<Strategy> strategy_constrained() {
  return std::make_unique<ConstrainedStrategy>();
}
std::unique_ptr<Strategy> strategy_aprad() { return std::make_unique<AprADStrategy>(); }

GenerationOutcome unconstrained_generate(const Model& model, TokenSpan prompt,
                                         const GenerationLimits& limits,
                                         Rng& rng) {
  CountingModel counted(model, limits.invocation_budget, limits.cache);
  GenerationOutcome out;
  out.sequence.assign(prompt.begin(), prompt.end());
  out.stats.attempts = 1;
  try {
    while (!finished(model, limits, out.sequence, prompt.size())) {
      out.sequence.push_back(sample_token(counted.conditional(out.sequence), rng));
    }
    out.completed = true;
  } catch (const BudgetExhausted&) {
    out.stats.budget_exhausted = true;
  }
  out.stats.invocations = counted.invocations();
  out.stats.output_tokens = out.sequence.size() - prompt.size();
  return out;
}

GenerationOutcome rejection_sample(const Model& model, const ErrorOracle& oracle,
                                   TokenSpan prompt,
                                   const GenerationLimits& limits, Rng& rng) {
  const std::size_t p = prompt.size();
  CountingModel counted(model, limits.invocation_budget, limits.cache);
  GenerationOutcome out;
  auto& stats = out.stats;
  Sequence seq;
  while (true) {
    counted.clear_cache();
    seq.assign(prompt.begin(), prompt.end());
    ++stats.attempts;
    try {
      while (!finished(model, limits, seq, p)) {
        seq.push_back(sample_token(counted.conditional(seq), rng));
      }
    } catch (const BudgetExhausted&) {
      stats.budget_exhausted = true;
      if (auto hit = first_hit(oracle, seq, p)) seq.resize(*hit - 1);
      break;
    }
    const auto hit = first_hit(oracle, seq, p);
    if (!hit) {
      out.completed = true;
      break;
    }
    if (!stats.first_error_length) stats.first_error_length = *hit;
    ++stats.errors_discovered;
  }
  out.sequence = std::move(seq);
  stats.invocations = counted.invocations();
  stats.output_tokens = out.sequence.size() - p;
  return out;
}

GenerationOutcome error_free_decoding(const Model& model,
                                      const ErrorOracle& oracle,
                                      TokenSpan prompt, const Strategy& strategy,
                                      const GenerationLimits& limits, Rng& rng,
                                      ExclusionTrie* shared_trie) {
  const std::size_t p = prompt.size();
  CountingModel counted(model, limits.invocation_budget, limits.cache);
  std::optional<ExclusionTrie> local;
  ExclusionTrie* trie = shared_trie;
  if (trie != nullptr) {
    trie->rebind(counted);
  } else {
    trie = &local.emplace(counted);
  }

  GenerationOutcome out;
  auto& stats = out.stats;
  stats.attempts = 1;
  Sequence seq(prompt.begin(), prompt.end());
  Sequence last_good = seq;
  try {
    while (!finished(model, limits, seq, p)) {
      seq.push_back(sample_token(trie->conditional(seq), rng));
      while (seq.size() > p && oracle.contains(seq)) {
        if (!stats.first_error_length) stats.first_error_length = seq.size();
        ++stats.errors_discovered;
        // The strategy needs the pre-update conditionals along seq.
        const PathSnapshot prev(*trie, seq, p);
        trie->add_bad_sample(seq, p);
        Sequence resumed = strategy.on_error(prev, *trie, seq, p, rng);
        if (common_prefix(resumed, seq) + 1 < seq.size()) ++stats.backtracks;
        seq = std::move(resumed);
      }
      last_good = seq;
    }
    out.completed = true;
  } catch (const BudgetExhausted&) {
    stats.budget_exhausted = true;
    seq = std::move(last_good);
  } catch (const FullyExcluded&) {
    // Every continuation of the prompt is a discovered error.
    seq = std::move(last_good);
  }
  if (shared_trie != nullptr) shared_trie->rebind(model);

  out.sequence = std::move(seq);
  stats.invocations = counted.invocations();
  stats.output_tokens = out.sequence.size() - p;
  return out;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kUnconstrained: return "unconstrained";
    case Method::kRejection: return "rejection";
    case Method::kConstrained: return "constrained";
    case Method::kAsap: return "asap";
    case Method::kAprad: return "aprad";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kUnconstrained, Method::kRejection,
                   Method::kConstrained, Method::kAsap, Method::kAprad}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

GenerationOutcome run_method(Method method, const Model& model,
                             const ErrorOracle& oracle, TokenSpan prompt,
                             const GenerationLimits& limits, Rng& rng,
                             ExclusionTrie* shared_trie) {
  switch (method) {
    case Method::kUnconstrained:
      return unconstrained_generate(model, prompt, limits, rng);
    case Method::kRejection:
      return rejection_sample(model, oracle, prompt, limits, rng);
    case Method::kConstrained:
      return error_free_decoding(model, oracle, prompt, ConstrainedStrategy{},
                                 limits, rng, shared_trie);
    case Method::kAsap:
      return error_free_decoding(model, oracle, prompt, AsapStrategy{}, limits,
                                 rng, shared_trie);
    case Method::kAprad:
      return error_free_decoding(model, oracle, prompt, AprADStrategy{}, limits,
                                 rng, shared_trie);
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace aprad
