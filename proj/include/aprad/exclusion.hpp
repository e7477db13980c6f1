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

#ifndef APRAD_EXCLUSION_HPP_
#define APRAD_EXCLUSION_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aprad/dist.hpp"
#include "aprad/model.hpp"
#include "aprad/vocab.hpp"

namespace aprad {

class FullyExcluded : public std::runtime_error {
 public:
  FullyExcluded() : std::runtime_error("every continuation of the prefix is excluded") {}
};

// A base model with a finite set of sequences B removed.
//
// Every recorded sequence has probability zero, and every other sequence is
// rescaled by 1 / (1 - P(B)). The trie stores, per touched prefix, the base
// conditional mass subtracted from each token; the adjusted conditional is
// normalize(max(0, base - removed)). Prefixes without a node are answered by
// the base model directly, so an empty trie is an exact pass-through.
//
// Single owner. The base source is held by reference and must outlive the
// trie (or be replaced with rebind()).
class ExclusionTrie final : public ConditionalSource {
 public:
  explicit ExclusionTrie(const ConditionalSource& base);
  ~ExclusionTrie() override;
  ExclusionTrie(ExclusionTrie&&) noexcept;
  ExclusionTrie& operator=(ExclusionTrie&&) noexcept;

  // Adjusted conditional. Throws FullyExcluded when the prefix has no
  // remaining continuation.
  Dist conditional(TokenSpan prefix) const override;

  bool fully_excluded(TokenSpan prefix) const;

  // Records x as an error: walks from the last token back to prompt_len,
  // subtracting the adjusted suffix probability at each node and
  // renormalizing. Returns the number of nodes updated, which is
  // x.size() - prompt_len, or 0 if x already had probability zero.
  std::size_t add_bad_sample(TokenSpan x, std::size_t prompt_len);

  // Product of adjusted conditionals after the prompt; 0 for recorded
  // sequences and their extensions.
  double sequence_probability(TokenSpan seq, std::size_t prompt_len) const;

  // Base conditional mass removed below `prefix` (0 for an untouched prefix).
  double excluded_mass(TokenSpan prefix = {}) const;

  // Nodes carrying corrections.
  std::size_t corrected_nodes() const;
  bool empty() const { return corrected_nodes() == 0; }

  void rebind(const ConditionalSource& base) { base_ = &base; }
  const ConditionalSource& base() const { return *base_; }

  // Line-oriented rendering of every corrected node in depth-first token
  // order: "<prefix>\t<adjusted probabilities>" with "-" for the empty
  // prefix and "X" in place of the probabilities for a dead node.
  std::string dump(const Vocab& vocab) const;

 private:
  struct Node {
    Eigen::VectorXd removed;  // empty until the node is first corrected
    bool fully_excluded = false;
    std::map<TokenId, std::unique_ptr<Node>> children;
  };

  const Node* find(TokenSpan prefix) const;
  Node& find_or_create(TokenSpan prefix);

  const ConditionalSource* base_;
  std::unique_ptr<Node> root_;
};

// Conditionals of a source captured along one sequence, for positions
// prompt_len .. seq.size()-1. Lets a caller keep reading the pre-update
// distribution after the trie it came from has been modified.
class PathSnapshot final : public ConditionalSource {
 public:
  PathSnapshot(const ConditionalSource& source, TokenSpan seq,
               std::size_t prompt_len);

  // Throws std::out_of_range for a prefix that was not captured.
  Dist conditional(TokenSpan prefix) const override;

 private:
  Sequence seq_;
  std::size_t prompt_len_;
  std::vector<Dist> dists_;
};

}  // namespace aprad

#endif  // APRAD_EXCLUSION_HPP_
