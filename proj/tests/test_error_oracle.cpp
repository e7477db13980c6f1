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

#include <doctest.h>

#include <random>

#include "aprad/error_oracle.hpp"
#include "test_support.hpp"

namespace aprad {
namespace {

const Vocab kAbc = Vocab::from_chars("ABC");

Sequence seq(std::string_view s) { return kAbc.parse(s); }

TEST_CASE("single pattern") {
  const PatternSet ps = parse_pattern_spec("AAA", kAbc);
  CHECK(!pattern_contains(ps, seq("AAB")));
  CHECK(pattern_contains(ps, seq("AAA")));
  CHECK(!pattern_contains(ps, seq("AA")));
  CHECK(pattern_contains(ps, seq("AAAB")));
}

TEST_CASE("wildcards with exceptions") {
  const PatternSet ps = parse_pattern_spec("A** except AAC", kAbc);
  CHECK(!pattern_contains(ps, seq("AAC")));
  CHECK(pattern_contains(ps, seq("ABB")));
  CHECK(!pattern_contains(ps, seq("BAA")));
  CHECK(!pattern_contains(ps, seq("AACB")));
}

TEST_CASE("parse_pattern_spec") {
  SUBCASE("list of exact patterns") {
    const PatternSet ps = parse_pattern_spec("AAA, AAC", kAbc);
    CHECK(ps.length == 3);
    CHECK(ps.include == std::vector<Sequence>{seq("AAA"), seq("AAC")});
    CHECK(ps.except.empty());
  }
  SUBCASE("everything except two") {
    const PatternSet ps = parse_pattern_spec("*** except AAA, BAA", kAbc);
    CHECK(ps.except == std::vector<Sequence>{seq("AAA"), seq("BAA")});
    int errors = 0;
    for (const auto& s : testing::all_sequences(3, 3)) errors += pattern_contains(ps, s);
    CHECK(errors == 25);
  }
  SUBCASE("empty spec is the empty error set") {
    for (std::string_view text : {"", "   "}) {
      const PatternSet ps = parse_pattern_spec(text, kAbc);
      CHECK(ps.include.empty());
      for (const auto& s : testing::all_sequences(3, 3)) CHECK(!pattern_contains(ps, s));
      CHECK(!pattern_contains(ps, Sequence{}));
    }
  }
  SUBCASE("whitespace around commas is ignored") {
    CHECK(parse_pattern_spec("AAA ,  ACC", kAbc) == parse_pattern_spec("AAA, ACC", kAbc));
    CHECK(parse_pattern_spec("AAA,ACC", kAbc) == parse_pattern_spec("AAA, ACC", kAbc));
  }
}

TEST_CASE("parse errors carry the offending position") {
  auto position_of = [](std::string_view text) -> std::size_t {
    try {
      parse_pattern_spec(text, kAbc);
    } catch (const PatternParseError& e) {
      return e.position();
    }
    FAIL("expected a parse error for '" << text << "'");
    return 0;
  };
  CHECK(position_of("AXA") == 1);
  CHECK(position_of("AAA, AA") == 5);
  CHECK(position_of("A** except A*C") == 12);
  CHECK(position_of("AAA,,AAB") == 4);
  CHECK_THROWS_AS(parse_pattern_spec("A** except BAA", kAbc), PatternParseError);
  CHECK_THROWS_AS(parse_pattern_spec("AA", Vocab({"AA", "B"})), PatternParseError);
}

TEST_CASE("parse then print then parse is the identity") {
  std::mt19937_64 gen(17);
  const std::string alphabet = "ABC*";
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t len = 1 + gen() % 4;
    std::string text;
    const std::size_t n = 1 + gen() % 3;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += ", ";
      for (std::size_t j = 0; j < len; ++j) text += alphabet[gen() % 4];
    }
    PatternSet ps = parse_pattern_spec(text, kAbc);
    // Add an except entry drawn from the first include pattern.
    if (gen() % 2) {
      std::string e;
      for (TokenId t : ps.include.front()) e += t == kWildcard ? "B" : kAbc.label(t);
      text += " except " + e;
      ps = parse_pattern_spec(text, kAbc);
    }
    const std::string printed = to_string(ps);
    CHECK(parse_pattern_spec(printed, kAbc) == ps);
    CHECK(to_string(parse_pattern_spec(printed, kAbc)) == printed);
  }
}

TEST_CASE("membership ignores tokens past the pattern length") {
  std::mt19937_64 gen(5);
  const PatternSet ps = parse_pattern_spec("A*B, C*C except ACB", kAbc);
  for (const auto& head : testing::all_sequences(3, 3)) {
    const bool expected = pattern_contains(ps, head);
    for (int k = 0; k < 5; ++k) {
      Sequence s = head;
      for (std::size_t extra = gen() % 4; extra > 0; --extra) s.push_back(gen() % 3);
      CHECK(pattern_contains(ps, s) == expected);
    }
  }
}

TEST_CASE("except specs leave exactly the listed sequences") {
  for (const char* spec : {"*** except AAA, BAA", "*** except AAA, AAB, ABA, BAA"}) {
    const PatternSet ps = parse_pattern_spec(spec, kAbc);
    std::size_t survivors = 0;
    for (const auto& s : testing::all_sequences(3, 3)) survivors += !pattern_contains(ps, s);
    CHECK(survivors == ps.except.size());
  }
}

TEST_CASE("banned symbols") {
  const BannedSymbolSet bs{{0}};
  CHECK(!banned_contains(bs, seq("BCB")));
  CHECK(banned_contains(bs, seq("BAC")));
  Sequence s = seq("BC");
  CHECK(!banned_contains(bs, s));
  s.push_back(0);
  CHECK(banned_contains(bs, s));
  for (const auto& tail : testing::all_sequences(3, 3)) {
    Sequence ext = s;
    ext.insert(ext.end(), tail.begin(), tail.end());
    CHECK(banned_contains(bs, ext));
  }
  CHECK_THROWS_AS(BannedSymbolOracle(BannedSymbolSet{{0, 1, 2}}, kAbc), InvariantError);
  CHECK_THROWS_AS(BannedSymbolOracle(BannedSymbolSet{{7}}, kAbc), InvariantError);
}

TEST_CASE("verify_prefix_closure") {
  CHECK(verify_prefix_closure(PatternOracle(parse_pattern_spec("AAA", kAbc)), kAbc, 4).closed);
  for (std::size_t len = 0; len <= 5; ++len) {
    CHECK(verify_prefix_closure(BannedSymbolOracle({{1}}, kAbc), kAbc, len).closed);
  }
  const FunctionOracle length_two([](TokenSpan s) { return s.size() == 2; });
  const ClosureReport report = verify_prefix_closure(length_two, kAbc, 4);
  CHECK(!report.closed);
  REQUIRE(report.counterexample);
  CHECK(report.counterexample->size() == 3);
  CHECK(report.error_prefix->size() == 2);
}

TEST_CASE("shipped oracles are closed two tokens past the pattern length") {
  for (const auto& spec : {"AAA", "AAA, AAB, ABA, BAA", "A** except AAC",
                           "*** except AAA, BAA", "AB*, C**"}) {
    const PatternSet ps = parse_pattern_spec(spec, kAbc);
    CHECK(verify_prefix_closure(PatternOracle(ps), kAbc, ps.length + 2).closed);
  }
  CHECK(verify_prefix_closure(BannedSymbolOracle({{0, 2}}, kAbc), kAbc, 5).closed);
}

}  // namespace
}  // namespace aprad
