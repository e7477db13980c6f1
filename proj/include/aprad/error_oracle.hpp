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

#ifndef APRAD_ERROR_ORACLE_HPP_
#define APRAD_ERROR_ORACLE_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aprad/vocab.hpp"

namespace aprad {

// Membership test for an error set. Implementations must be prefix closed:
// if contains(x) then contains(x ++ y) for every y. They must also be pure,
// since samplers may query them any number of times.
class ErrorOracle {
 public:
  virtual ~ErrorOracle() = default;
  virtual bool contains(TokenSpan seq) const = 0;
};

// Wraps an arbitrary predicate. Nothing checks closure; see
// verify_prefix_closure().
class FunctionOracle final : public ErrorOracle {
 public:
  explicit FunctionOracle(std::function<bool(TokenSpan)> fn) : fn_(std::move(fn)) {}
  bool contains(TokenSpan seq) const override { return fn_(seq); }

 private:
  std::function<bool(TokenSpan)> fn_;
};

inline constexpr TokenId kWildcard = static_cast<TokenId>(-1);

// Error set given by fixed-length patterns over the vocabulary.
//
// A sequence is an error when its first `length` tokens match some include
// pattern (kWildcard matches any token) and are not listed in `except`.
// Sequences shorter than `length` are never errors, and tokens past
// `length` are ignored, which is what makes the set prefix closed.
struct PatternSet {
  Vocab vocab;
  std::size_t length = 0;
  std::vector<Sequence> include;
  std::vector<Sequence> except;

  bool operator==(const PatternSet&) const = default;
};

bool pattern_contains(const PatternSet& ps, TokenSpan seq);

class PatternParseError : public std::invalid_argument {
 public:
  PatternParseError(const std::string& what, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Grammar:
//   spec         := "" | pattern_list [ " except " seq_list ]
//   pattern_list := pattern { "," pattern }
//   pattern      := L characters, each a token label or '*'
// The except list uses the same form without wildcards. Whitespace around
// commas is ignored. Labels must be single characters.
PatternSet parse_pattern_spec(std::string_view text, const Vocab& vocab);

// Canonical text form; parse_pattern_spec(to_string(ps)) == ps.
std::string to_string(const PatternSet& ps);

class PatternOracle final : public ErrorOracle {
 public:
  explicit PatternOracle(PatternSet ps) : ps_(std::move(ps)) {}
  bool contains(TokenSpan seq) const override { return pattern_contains(ps_, seq); }
  const PatternSet& patterns() const { return ps_; }

 private:
  PatternSet ps_;
};

// Any occurrence of a banned token makes the sequence an error.
struct BannedSymbolSet {
  std::set<TokenId> banned;
};

bool banned_contains(const BannedSymbolSet& bs, TokenSpan seq);

class BannedSymbolOracle final : public ErrorOracle {
 public:
  // Throws InvariantError unless banned is a proper subset of the vocab.
  BannedSymbolOracle(BannedSymbolSet bs, const Vocab& vocab);
  bool contains(TokenSpan seq) const override { return banned_contains(bs_, seq); }
  const BannedSymbolSet& banned() const { return bs_; }

 private:
  BannedSymbolSet bs_;
};

struct ClosureReport {
  bool closed = true;
  // On failure: an error sequence and a one-token extension that is not.
  std::optional<Sequence> error_prefix;
  std::optional<Sequence> counterexample;
};

// Exhaustively checks prefix closure over all sequences up to max_len.
ClosureReport verify_prefix_closure(const ErrorOracle& oracle,
                                    const Vocab& vocab, std::size_t max_len);

}  // namespace aprad

#endif  // APRAD_ERROR_ORACLE_HPP_
