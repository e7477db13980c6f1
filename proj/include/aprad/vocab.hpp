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

#ifndef APRAD_VOCAB_HPP_
#define APRAD_VOCAB_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aprad {

using TokenId = std::uint32_t;
using Sequence = std::vector<TokenId>;
using TokenSpan = std::span<const TokenId>;

// Raised when a value violates a documented invariant of a domain type.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Ordered set of distinct token labels. Token ids are positions in the list.
class Vocab {
 public:
  explicit Vocab(std::vector<std::string> labels);

  // One token per character: Vocab::from_chars("ABC") == {A, B, C}.
  static Vocab from_chars(std::string_view chars);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(TokenId id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<TokenId> find(std::string_view label) const;

  // True when every label is exactly one character, which makes
  // concatenated rendering unambiguous.
  bool single_char() const;

  // Concatenates labels; with single-character labels this is invertible.
  std::string render(TokenSpan seq) const;
  // Inverse of render() for single-character vocabularies.
  Sequence parse(std::string_view text) const;

  bool operator==(const Vocab&) const = default;

 private:
  std::vector<std::string> labels_;
};

// Checks every id is below vocab.size().
bool in_vocab(const Vocab& vocab, TokenSpan seq);

struct SequenceHash {
  std::size_t operator()(const Sequence& seq) const noexcept;
};

}  // namespace aprad

#endif  // APRAD_VOCAB_HPP_
