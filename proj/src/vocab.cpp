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

#include "aprad/vocab.hpp"

#include <algorithm>
#include <set>

namespace aprad {

Vocab::Vocab(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw InvariantError("vocab needs at least two tokens");
  }
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw InvariantError("empty token label");
    if (!seen.insert(label).second) {
      throw InvariantError("duplicate token label '" + label + "'");
    }
  }
}

Vocab Vocab::from_chars(std::string_view chars) {
  std::vector<std::string> labels;
  labels.reserve(chars.size());
  for (char c : chars) labels.emplace_back(1, c);
  return Vocab(std::move(labels));
}

std::optional<TokenId> Vocab::find(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<TokenId>(it - labels_.begin());
}

bool Vocab::single_char() const {
  return std::all_of(labels_.begin(), labels_.end(),
                     [](const std::string& l) { return l.size() == 1; });
}

std::string Vocab::render(TokenSpan seq) const {
  std::string out;
  for (TokenId t : seq) out += label(t);
  return out;
}

Sequence Vocab::parse(std::string_view text) const {
  if (!single_char()) {
    throw InvariantError("Vocab::parse needs single-character labels");
  }
  Sequence seq;
  seq.reserve(text.size());
  for (char c : text) {
    auto id = find(std::string_view(&c, 1));
    if (!id) throw InvariantError(std::string("unknown token '") + c + "'");
    seq.push_back(*id);
  }
  return seq;
}

bool in_vocab(const Vocab& vocab, TokenSpan seq) {
  return std::all_of(seq.begin(), seq.end(),
                     [&](TokenId t) { return t < vocab.size(); });
}

std::size_t SequenceHash::operator()(const Sequence& seq) const noexcept {
  // FNV-1a over the token ids.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (TokenId t : seq) {
    h ^= t;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

}  // namespace aprad
