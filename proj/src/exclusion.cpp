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

#include "aprad/exclusion.hpp"

#include <cstdio>
#include <functional>
#include <sstream>

namespace aprad {

namespace {

// A node whose remaining base mass falls below this has no continuation.
constexpr double kDeadMass = 1e-12;

Eigen::VectorXd remaining(const Dist& base, const Eigen::VectorXd& removed) {
  return (base.probs() - removed).cwiseMax(0.0);
}

}  // namespace

ExclusionTrie::ExclusionTrie(const ConditionalSource& base)
    : base_(&base), root_(std::make_unique<Node>()) {}

ExclusionTrie::~ExclusionTrie() = default;
ExclusionTrie::ExclusionTrie(ExclusionTrie&&) noexcept = default;
ExclusionTrie& ExclusionTrie::operator=(ExclusionTrie&&) noexcept = default;

const ExclusionTrie::Node* ExclusionTrie::find(TokenSpan prefix) const {
  const Node* node = root_.get();
  for (TokenId t : prefix) {
    auto it = node->children.find(t);
    if (it == node->children.end()) return nullptr;
    node = it->second.get();
  }
  return node;
}

ExclusionTrie::Node& ExclusionTrie::find_or_create(TokenSpan prefix) {
  Node* node = root_.get();
  for (TokenId t : prefix) {
    auto& child = node->children[t];
    if (!child) child = std::make_unique<Node>();
    node = child.get();
  }
  return *node;
}

Dist ExclusionTrie::conditional(TokenSpan prefix) const {
  const Node* node = find(prefix);
  if (node == nullptr || node->removed.size() == 0) {
    return base_->conditional(prefix);
  }
  if (node->fully_excluded) throw FullyExcluded();
  const Eigen::VectorXd w = remaining(base_->conditional(prefix), node->removed);
  if (w.sum() < kDeadMass) throw FullyExcluded();
  return normalize(w);
}

bool ExclusionTrie::fully_excluded(TokenSpan prefix) const {
  const Node* node = find(prefix);
  return node != nullptr && node->fully_excluded;
}

std::size_t ExclusionTrie::add_bad_sample(TokenSpan x, std::size_t prompt_len) {
  if (x.size() <= prompt_len) {
    throw InvariantError("add_bad_sample needs at least one generated token");
  }
  const std::size_t m = x.size();

  // Adjusted probability of each token of x under the current trie.
  std::vector<double> step(m, 1.0);
  for (std::size_t i = prompt_len; i < m; ++i) {
    try {
      step[i] = conditional(x.first(i))[x[i]];
    } catch (const FullyExcluded&) {
      return 0;
    }
    if (step[i] <= 0.0) return 0;
  }

  // Walk backwards; `suffix` is P(x[i..m) | x[..i)) under the old trie.
  double suffix = 1.0;
  bool child_dead = true;  // the completed sequence itself is removed
  for (std::size_t i = m; i-- > prompt_len;) {
    suffix *= step[i];
    const TokenSpan prefix = x.first(i);
    const Dist base = base_->conditional(prefix);
    Node& node = find_or_create(prefix);
    if (node.removed.size() == 0) {
      node.removed = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(base.size()));
    }
    const auto token = static_cast<Eigen::Index>(x[i]);
    if (child_dead) {
      node.removed[token] = base[x[i]];
    } else {
      // Subtracting `suffix` from the normalized entry and renormalizing is
      // the same as subtracting suffix * (remaining mass) in base units.
      node.removed[token] += suffix * remaining(base, node.removed).sum();
    }
    node.fully_excluded = remaining(base, node.removed).sum() < kDeadMass;
    child_dead = node.fully_excluded;
  }
  return m - prompt_len;
}

double ExclusionTrie::sequence_probability(TokenSpan seq,
                                           std::size_t prompt_len) const {
  double p = 1.0;
  for (std::size_t i = prompt_len; i < seq.size() && p > 0.0; ++i) {
    try {
      p *= conditional(seq.first(i))[seq[i]];
    } catch (const FullyExcluded&) {
      return 0.0;
    }
  }
  return p;
}

double ExclusionTrie::excluded_mass(TokenSpan prefix) const {
  const Node* node = find(prefix);
  if (node == nullptr || node->removed.size() == 0) return 0.0;
  return 1.0 - remaining(base_->conditional(prefix), node->removed).sum();
}

std::size_t ExclusionTrie::corrected_nodes() const {
  std::function<std::size_t(const Node&)> count = [&](const Node& node) {
    std::size_t n = node.removed.size() > 0 ? 1 : 0;
    for (const auto& [token, child] : node.children) n += count(*child);
    return n;
  };
  return count(*root_);
}

std::string ExclusionTrie::dump(const Vocab& vocab) const {
  std::ostringstream out;
  out << "# exclusion-trie v1\n";
  Sequence path;
  std::function<void(const Node&)> visit = [&](const Node& node) {
    if (node.removed.size() > 0) {
      out << (path.empty() ? std::string("-") : vocab.render(path)) << '\t';
      if (node.fully_excluded) {
        out << 'X';
      } else {
        const Dist d = conditional(path);
        char buf[32];
        for (std::size_t t = 0; t < d.size(); ++t) {
          std::snprintf(buf, sizeof buf, "%.12g", d[static_cast<TokenId>(t)]);
          out << (t ? " " : "") << buf;
        }
      }
      out << '\n';
    }
    for (const auto& [token, child] : node.children) {
      path.push_back(token);
      visit(*child);
      path.pop_back();
    }
  };
  visit(*root_);
  return out.str();
}

PathSnapshot::PathSnapshot(const ConditionalSource& source, TokenSpan seq,
                           std::size_t prompt_len)
    : seq_(seq.begin(), seq.end()), prompt_len_(prompt_len) {
  dists_.reserve(seq.size() - std::min(prompt_len, seq.size()));
  for (std::size_t i = prompt_len; i < seq.size(); ++i) {
    dists_.push_back(source.conditional(seq.first(i)));
  }
}

Dist PathSnapshot::conditional(TokenSpan prefix) const {
  const std::size_t len = prefix.size();
  if (len < prompt_len_ || len >= seq_.size() ||
      !std::equal(prefix.begin(), prefix.end(), seq_.begin())) {
    throw std::out_of_range("prefix not captured by the snapshot");
  }
  return dists_[len - prompt_len_];
}

}  // namespace aprad
