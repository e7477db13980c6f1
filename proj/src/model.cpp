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

#include "aprad/model.hpp"

#include <algorithm>

namespace aprad {

UniformModel::UniformModel(Vocab vocab)
    : vocab_(std::move(vocab)), dist_(Dist::uniform(vocab_.size())) {}

Dist UniformModel::conditional(TokenSpan /*prefix*/) const { return dist_; }

TableModel::TableModel(Vocab vocab, std::map<Sequence, Dist> table,
                       Dist fallback, std::optional<TokenId> eos)
    : vocab_(std::move(vocab)),
      table_(std::move(table)),
      fallback_(std::move(fallback)),
      eos_(eos) {
  if (fallback_.size() != vocab_.size()) {
    throw InvariantError("default row does not match the vocab size");
  }
  for (const auto& [prefix, dist] : table_) {
    if (dist.size() != vocab_.size() || !in_vocab(vocab_, prefix)) {
      throw InvariantError("table row does not match the vocab");
    }
  }
  if (eos_ && *eos_ >= vocab_.size()) throw InvariantError("eos outside vocab");
}

Dist TableModel::conditional(TokenSpan prefix) const {
  auto it = table_.find(Sequence(prefix.begin(), prefix.end()));
  return it == table_.end() ? fallback_ : it->second;
}

Dist SamplingTransforms::apply(Dist dist) const {
  if (temperature) dist = apply_temperature(dist, *temperature);
  if (top_k) dist = apply_top_k(dist, *top_k);
  if (top_p) dist = apply_top_p(dist, *top_p);
  return dist;
}

TransformedModel::TransformedModel(std::shared_ptr<const Model> inner,
                                   SamplingTransforms transforms)
    : inner_(std::move(inner)), transforms_(transforms) {
  if (!inner_) throw InvariantError("TransformedModel needs a model");
}

Dist TransformedModel::conditional(TokenSpan prefix) const {
  return transforms_.apply(inner_->conditional(prefix));
}

double sequence_probability(const ConditionalSource& model, TokenSpan seq,
                            std::size_t prompt_len) {
  double p = 1.0;
  for (std::size_t i = prompt_len; i < seq.size() && p > 0.0; ++i) {
    p *= model.conditional(seq.first(i))[seq[i]];
  }
  return p;
}

CountingModel::CountingModel(const Model& inner, std::size_t budget,
                             CachePolicy policy)
    : inner_(inner), budget_(budget), policy_(policy) {}

const Dist* CountingModel::lookup(TokenSpan prefix) const {
  if (policy_ == CachePolicy::kEpisode) {
    auto it = memo_.find(Sequence(prefix.begin(), prefix.end()));
    return it == memo_.end() ? nullptr : &it->second;
  }
  if (prefix.size() >= path_dists_.size() ||
      !std::equal(prefix.begin(), prefix.end(), path_.begin())) {
    return nullptr;
  }
  const auto& slot = path_dists_[prefix.size()];
  return slot ? &*slot : nullptr;
}

bool CountingModel::cached(TokenSpan prefix) const {
  return lookup(prefix) != nullptr;
}

void CountingModel::clear_cache() {
  path_.clear();
  path_dists_.clear();
  memo_.clear();
}

Dist CountingModel::conditional(TokenSpan prefix) const {
  if (const Dist* hit = lookup(prefix)) return *hit;
  if (invocations_ >= budget_) throw BudgetExhausted();
  ++invocations_;
  Dist dist = inner_.conditional(prefix);
  if (policy_ == CachePolicy::kEpisode) {
    memo_.emplace(Sequence(prefix.begin(), prefix.end()), dist);
    return dist;
  }
  // Keep the part of the old path shared with the new prefix.
  const auto shared = static_cast<std::size_t>(
      std::mismatch(prefix.begin(), prefix.end(), path_.begin(), path_.end())
          .first -
      prefix.begin());
  path_.assign(prefix.begin(), prefix.end());
  path_dists_.resize(std::min(path_dists_.size(), shared + 1));
  path_dists_.resize(prefix.size() + 1);
  path_dists_[prefix.size()] = dist;
  return dist;
}

}  // namespace aprad
