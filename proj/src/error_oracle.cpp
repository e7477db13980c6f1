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

#include "aprad/error_oracle.hpp"

#include <algorithm>
#include <cctype>

namespace aprad {

namespace {

constexpr std::string_view kExcept = "except";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool matches(const Sequence& pattern, TokenSpan seq) {
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != kWildcard && pattern[i] != seq[i]) return false;
  }
  return true;
}

// Position of the "except" keyword when it stands alone between whitespace,
// or npos.
std::size_t find_except(std::string_view text) {
  for (std::size_t pos = text.find(kExcept); pos != std::string_view::npos;
       pos = text.find(kExcept, pos + 1)) {
    const std::size_t end = pos + kExcept.size();
    const bool left = pos > 0 && is_space(text[pos - 1]);
    const bool right = end < text.size() && is_space(text[end]);
    if (left && right) return pos;
  }
  return std::string_view::npos;
}

class ListParser {
 public:
  ListParser(std::string_view text, const Vocab& vocab)
      : text_(text), vocab_(vocab) {}

  // Parses the comma-separated list in [begin, end). Wildcards become
  // kWildcard; `length` is fixed by the first item when still 0.
  std::vector<Sequence> parse(std::size_t begin, std::size_t end,
                              bool allow_wildcards, std::size_t& length) const {
    std::vector<Sequence> items;
    std::size_t item_begin = begin;
    while (true) {
      std::size_t comma = text_.find(',', item_begin);
      if (comma == std::string_view::npos || comma > end) comma = end;
      items.push_back(parse_item(item_begin, comma, allow_wildcards, length));
      if (comma == end) break;
      item_begin = comma + 1;
    }
    return items;
  }

 private:
  Sequence parse_item(std::size_t begin, std::size_t end, bool allow_wildcards,
                      std::size_t& length) const {
    while (begin < end && is_space(text_[begin])) ++begin;
    while (end > begin && is_space(text_[end - 1])) --end;
    if (begin == end) throw PatternParseError("empty pattern", begin);
    Sequence item;
    for (std::size_t i = begin; i < end; ++i) {
      const char c = text_[i];
      if (c == '*') {
        if (!allow_wildcards) {
          throw PatternParseError("wildcard in except entry", i);
        }
        item.push_back(kWildcard);
        continue;
      }
      auto id = vocab_.find(std::string_view(&c, 1));
      if (!id) {
        throw PatternParseError(std::string("unknown symbol '") + c + "'", i);
      }
      item.push_back(*id);
    }
    if (length == 0) {
      length = item.size();
    } else if (item.size() != length) {
      throw PatternParseError("pattern length differs from " +
                                  std::to_string(length),
                              begin);
    }
    return item;
  }

  std::string_view text_;
  const Vocab& vocab_;
};

}  // namespace

bool pattern_contains(const PatternSet& ps, TokenSpan seq) {
  if (ps.length == 0 || seq.size() < ps.length) return false;
  const TokenSpan head = seq.first(ps.length);
  const bool included = std::any_of(
      ps.include.begin(), ps.include.end(),
      [&](const Sequence& p) { return matches(p, head); });
  if (!included) return false;
  return std::none_of(ps.except.begin(), ps.except.end(),
                      [&](const Sequence& e) { return matches(e, head); });
}

PatternParseError::PatternParseError(const std::string& what,
                                     std::size_t position)
    : std::invalid_argument(what + " at position " + std::to_string(position)),
      position_(position) {}

PatternSet parse_pattern_spec(std::string_view text, const Vocab& vocab) {
  if (!vocab.single_char()) {
    throw PatternParseError("pattern vocab labels must be single characters", 0);
  }
  PatternSet ps{vocab, 0, {}, {}};
  if (std::all_of(text.begin(), text.end(), is_space)) return ps;

  ListParser parser(text, vocab);
  const std::size_t except_pos = find_except(text);
  const std::size_t include_end =
      except_pos == std::string_view::npos ? text.size() : except_pos;
  ps.include = parser.parse(0, include_end, /*allow_wildcards=*/true, ps.length);
  if (except_pos != std::string_view::npos) {
    const std::size_t except_begin = except_pos + kExcept.size();
    ps.except = parser.parse(except_begin, text.size(),
                             /*allow_wildcards=*/false, ps.length);
    for (const auto& e : ps.except) {
      const bool covered =
          std::any_of(ps.include.begin(), ps.include.end(),
                      [&](const Sequence& p) { return matches(p, e); });
      if (!covered) {
        throw PatternParseError(
            "except entry " + vocab.render(e) + " matches no pattern",
            except_begin);
      }
    }
  }
  return ps;
}

std::string to_string(const PatternSet& ps) {
  auto render = [&](const Sequence& item) {
    std::string s;
    for (TokenId t : item) s += t == kWildcard ? "*" : ps.vocab.label(t);
    return s;
  };
  std::string out;
  for (std::size_t i = 0; i < ps.include.size(); ++i) {
    if (i > 0) out += ", ";
    out += render(ps.include[i]);
  }
  if (!ps.except.empty()) {
    out += " except ";
    for (std::size_t i = 0; i < ps.except.size(); ++i) {
      if (i > 0) out += ", ";
      out += render(ps.except[i]);
    }
  }
  return out;
}

bool banned_contains(const BannedSymbolSet& bs, TokenSpan seq) {
  return std::any_of(seq.begin(), seq.end(),
                     [&](TokenId t) { return bs.banned.contains(t); });
}

BannedSymbolOracle::BannedSymbolOracle(BannedSymbolSet bs, const Vocab& vocab)
    : bs_(std::move(bs)) {
  for (TokenId t : bs_.banned) {
    if (t >= vocab.size()) throw InvariantError("banned token outside vocab");
  }
  if (bs_.banned.size() >= vocab.size()) {
    throw InvariantError("at least one token must remain allowed");
  }
}

ClosureReport verify_prefix_closure(const ErrorOracle& oracle,
                                    const Vocab& vocab, std::size_t max_len) {
  std::vector<Sequence> frontier{Sequence{}};
  for (std::size_t len = 0; len < max_len; ++len) {
    std::vector<Sequence> next;
    next.reserve(frontier.size() * vocab.size());
    for (const auto& seq : frontier) {
      const bool is_error = oracle.contains(seq);
      for (TokenId t = 0; t < vocab.size(); ++t) {
        Sequence ext = seq;
        ext.push_back(t);
        if (is_error && !oracle.contains(ext)) {
          return ClosureReport{false, seq, ext};
        }
        next.push_back(std::move(ext));
      }
    }
    frontier = std::move(next);
  }
  return ClosureReport{};
}

}  // namespace aprad
