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

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "aprad/evaluation.hpp"
#include "aprad/exclusion.hpp"
#include "test_support.hpp"

namespace aprad {
namespace {

const Vocab kAbc = Vocab::from_chars("ABC");

PatternOracle pattern(std::string_view spec, const Vocab& vocab = kAbc) {
  return PatternOracle(parse_pattern_spec(spec, vocab));
}

TEST_CASE("ideal distribution examples") {
  const UniformModel m(kAbc);
  SUBCASE("AAA removed from uniform ABC") {
    const SeqDist d = ideal_distribution(m, pattern("AAA"), 3);
    CHECK(d.size() == 26);
    CHECK(d.count(Sequence{0, 0, 0}) == 0);
    for (const auto& [s, p] : d) CHECK(p == doctest::Approx(1.0 / 26));
  }
  SUBCASE("two-token AA example") {
    const Vocab ab = Vocab::from_chars("AB");
    const UniformModel m2(ab);
    const SeqDist d = ideal_distribution(m2, pattern("AA", ab), 2);
    CHECK(d.size() == 3);
    for (const auto& [s, p] : d) CHECK(p == doctest::Approx(1.0 / 3));
  }
  SUBCASE("nothing left") {
    CHECK_THROWS_AS(ideal_distribution(m, pattern("***"), 3), AllExcludedError);
  }
  SUBCASE("enumeration guard") {
    const UniformModel big(testing::letters(16));
    CHECK_THROWS_AS(ideal_distribution(big, pattern(""), 6), std::length_error);
  }
  SUBCASE("zero length") {
    const SeqDist d = ideal_distribution(m, pattern(""), 0);
    REQUIRE(d.size() == 1);
    CHECK(d.begin()->second == 1.0);
  }
}

TEST_CASE("ideal distribution agrees with the exclusion trie") {
  // Excluding every error sequence one by one leaves the trie's sequence law
  // equal to the renormalized restriction.
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + gen() % 2;
    const TableModel model = testing::random_table_model(n, 3, gen);
    const auto all = testing::all_sequences(n, 3);
    std::set<Sequence> errors;
    for (const auto& s : all) {
      if (gen() % 4 == 0) errors.insert(s);
    }
    if (errors.size() == all.size()) continue;
    const FunctionOracle oracle([&](TokenSpan s) {
      return s.size() >= 3 && errors.count(Sequence(s.begin(), s.begin() + 3)) > 0;
    });
    ExclusionTrie trie(model);
    for (const auto& e : errors) trie.add_bad_sample(e, 0);
    const SeqDist ideal = ideal_distribution(model, oracle, 3);
    for (const auto& s : all) {
      const auto it = ideal.find(s);
      const double p = it == ideal.end() ? 0.0 : it->second;
      CHECK(trie.sequence_probability(s, 0) == doctest::Approx(p).epsilon(1e-9));
    }
  }
}

TEST_CASE("empirical distribution") {
  const std::vector<Sequence> xs{{0, 1}, {0, 1}, {1, 1}, {0, 0}};
  const SeqDist d = empirical_distribution(xs);
  CHECK(d.size() == 3);
  CHECK(d.at(Sequence{0, 1}) == 0.5);
  CHECK(d.at(Sequence{1, 1}) == 0.25);
  CHECK_THROWS_AS(empirical_distribution(std::span<const Sequence>{}), std::invalid_argument);
}

TEST_CASE("kl divergence") {
  const SeqDist half{{Sequence{0}, 0.5}, {Sequence{1}, 0.5}};
  const SeqDist point{{Sequence{0}, 1.0}};
  CHECK(kl_divergence(half, half) == 0.0);
  CHECK(kl_divergence(point, half) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(kl_divergence(half, point), InfiniteDivergence);

  std::mt19937_64 gen(5);
  for (int i = 0; i < 100; ++i) {
    const Dist p = testing::random_dist(6, gen, 0.0);
    const Dist q = testing::random_dist(6, gen, 0.01);
    SeqDist sp, sq;
    double ref = 0.0;
    for (TokenId t = 0; t < 6; ++t) {
      sp[Sequence{t}] = p[t];
      sq[Sequence{t}] = q[t];
      if (p[t] > 0) ref += p[t] * std::log(p[t] / q[t]);
    }
    const double kl = kl_divergence(sp, sq);
    CHECK(kl >= 0.0);
    CHECK(kl == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("run_cell scores samples against the ideal law") {
  const UniformModel m(kAbc);
  const auto oracle = pattern("AAA");
  const SeqDist ideal = ideal_distribution(m, oracle, 3);
  const CellResult asap =
      run_cell(m, oracle, ideal, Method::kAsap, 3000, 3, 1, 2000, false);
  CHECK(asap.incomplete == 0);
  CHECK(asap.error_outputs == 0);
  CHECK(asap.output_tokens == 9000);
  CHECK(asap.invocations >= 9000);
  CHECK(asap.kl < 0.02);

  const CellResult unconstrained =
      run_cell(m, oracle, ideal, Method::kUnconstrained, 3000, 3, 1, 2000, false);
  CHECK(unconstrained.error_outputs > 0);
  CHECK(std::isinf(unconstrained.kl));
}

TEST_CASE("testbench is reproducible") {
  TestbenchConfig config;
  config.specs = {"", "AAA", "A** except AAC"};
  config.samples = 500;
  config.seeds = {4, 9};
  config.threads = 2;
  const TestbenchReport a = run_testbench(config);
  config.threads = 1;
  const TestbenchReport b = run_testbench(config);
  REQUIRE(a.rows.size() == 9);
  REQUIRE(b.rows.size() == 9);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].error_set == b.rows[i].error_set);
    CHECK(a.rows[i].method == b.rows[i].method);
    CHECK(a.rows[i].kl_mean == b.rows[i].kl_mean);
    CHECK(a.rows[i].ratio_mean == b.rows[i].ratio_mean);
    CHECK(a.rows[i].cells.size() == 2);
  }
  const TestbenchRow* row = a.find("AAA", Method::kConstrained);
  REQUIRE(row != nullptr);
  CHECK(row->samples == 500);
  CHECK(a.find("AAA", Method::kUnconstrained) == nullptr);
  CHECK(!a.any_infinite_divergence());

  std::ostringstream csv;
  write_csv(csv, a);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == kReportCsvHeader);
  std::size_t count = 0;
  for (std::string line; std::getline(lines, line);) ++count;
  CHECK(count == 9);

  const auto json = to_json(a);
  REQUIRE(json.at("rows").size() == 9);
  CHECK(json["rows"][0]["method"] == "asap");
  CHECK(json["rows"][3]["error_set"] == "AAA");

  std::ostringstream table;
  write_table(table, a);
  CHECK(table.str().find("A** except AAC") != std::string::npos);
}

TEST_CASE("testbench rejects bad configurations") {
  TestbenchConfig config;
  config.samples = 10;
  config.specs = {"AXA"};
  CHECK_THROWS_AS(run_testbench(config), PatternParseError);
  config.specs = {"***"};
  CHECK_THROWS_AS(run_testbench(config), AllExcludedError);
}

TEST_CASE("csv formatting") {
  TestbenchReport report;
  TestbenchRow row;
  row.error_set = "AAA, AAC";
  row.method = Method::kAprad;
  row.kl_mean = 0.01234567;
  row.kl_sd = 0.001;
  row.ratio_mean = 1.0144;
  row.ratio_sd = 0.0021;
  row.samples = 10000;
  row.seeds = {1, 2, 3};
  report.rows.push_back(row);
  row.error_set = "";
  row.kl_mean = std::numeric_limits<double>::infinity();
  row.infinite_divergence = true;
  report.rows.push_back(row);

  std::ostringstream out;
  write_csv(out, report);
  CHECK(out.str() ==
        std::string(kReportCsvHeader) + "\n" +
            "\"AAA, AAC\",aprad,0.0123,0.0010,1.014,0.002,10000,1 2 3\n"
            "\"\",aprad,inf,0.0010,1.014,0.002,10000,1 2 3\n");
  const auto json = to_json(report);
  CHECK(json["rows"][1]["kl_div"].is_null());
  CHECK(report.any_infinite_divergence());
}

}  // namespace
}  // namespace aprad
